#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mflqg {

// Base of every failure the library reports. kind() is a stable machine-readable
// tag ("AssumptionViolation", "RiccatiBlowUp", ...) used by the CLI error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("ConfigError", message) {}
};

class MissingCoefficient : public Error {
 public:
  explicit MissingCoefficient(std::string name)
      : Error("MissingCoefficient", "missing coefficient: " + name), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class AssumptionViolation : public Error {
 public:
  AssumptionViolation(std::string condition, int node)
      : Error("AssumptionViolation",
              "assumption violated: " + condition +
                  (node >= 0 ? " at node " + std::to_string(node) : std::string{})),
        condition_(std::move(condition)),
        node_(node) {}

  const std::string& condition() const noexcept { return condition_; }
  // -1 when the condition is not tied to a grid node (e.g. G >= 0).
  int node() const noexcept { return node_; }

 private:
  std::string condition_;
  int node_;
};

class OutOfDomain : public Error {
 public:
  explicit OutOfDomain(double t)
      : Error("OutOfDomain", "time " + std::to_string(t) + " outside [0, T]"), t_(t) {}

  double time() const noexcept { return t_; }

 private:
  double t_;
};

class RiccatiBlowUp : public Error {
 public:
  RiccatiBlowUp(std::string equation, int node, double t)
      : Error("RiccatiBlowUp", "solution of " + equation + " exceeded bound at node " +
                                   std::to_string(node) + " (t=" + std::to_string(t) + ")"),
        equation_(std::move(equation)),
        node_(node),
        t_(t) {}

  const std::string& equation() const noexcept { return equation_; }
  int node() const noexcept { return node_; }
  double time() const noexcept { return t_; }

 private:
  std::string equation_;
  int node_;
  double t_;
};

class DegenerateData : public Error {
 public:
  explicit DegenerateData(const std::string& message) : Error("DegenerateData", message) {}
};

class InsufficientReplications : public Error {
 public:
  explicit InsufficientReplications(const std::string& message)
      : Error("InsufficientReplications", message) {}
};

}  // namespace mflqg
