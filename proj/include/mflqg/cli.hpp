#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mflqg/config.hpp"
#include "mflqg/harness.hpp"

namespace mflqg::cli {

inline constexpr const char* kVersion = "0.1.0";

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

// Columns of doubles written with 17 significant digits.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) { out_ << std::setprecision(17); }

  void header(const std::vector<std::string>& names) {
    for (std::size_t j = 0; j < names.size(); ++j) out_ << (j ? "," : "") << names[j];
    out_ << '\n';
  }
  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cells, first = false), ...);
    out_ << '\n';
  }
  void row(const std::vector<double>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) out_ << (j ? "," : "") << cells[j];
    out_ << '\n';
  }

 private:
  std::ostream& out_;
};

struct Options {
  std::string command;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<int> reps;
  std::vector<int> agents;
  std::string format = "csv";
  std::optional<int> threads;
  bool dump_paths = false;
  bool allow_imprecise = false;
  bool no_antithetic = false;
};

// Files written so far, relative to the output directory.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::ofstream open(const std::string& name) {
    std::filesystem::create_directories(dir_);
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (dir_ / name).string());
    names_.push_back(name);
    return f;
  }
  void write_json(const std::string& name, const nlohmann::json& j) {
    auto f = open(name);
    f << j.dump(2) << '\n';
  }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> names_;
};

inline nlohmann::json path_table_json(const TimeGrid& grid, const std::vector<std::string>& names,
                                      const std::vector<const ScalarPath*>& paths) {
  nlohmann::json j;
  std::vector<double> t;
  for (int k = 0; k < grid.nodes(); ++k) t.push_back(grid.time(k));
  j["t"] = t;
  for (std::size_t c = 0; c < names.size(); ++c) j[names[c]] = paths[c]->values();
  return j;
}

inline void write_paths(OutputSet& outs, const std::string& stem, const std::string& format, const TimeGrid& grid,
                        const std::vector<std::string>& names, const std::vector<const ScalarPath*>& paths) {
  if (format == "json") {
    outs.write_json(stem + ".json", path_table_json(grid, names, paths));
    return;
  }
  auto f = outs.open(stem + ".csv");
  CsvWriter w(f);
  std::vector<std::string> header{"t"};
  header.insert(header.end(), names.begin(), names.end());
  w.header(header);
  for (int k = 0; k < grid.nodes(); ++k) {
    std::vector<double> row{grid.time(k)};
    for (const auto* p : paths) row.push_back((*p)[k]);
    w.row(row);
  }
}

inline void run_solve_pf(const Model& model, const Options& opt, OutputSet& outs) {
  const PFConsistency c = solve_pf_consistency(model);
  write_paths(outs, "consistency_pf", opt.format, model.grid,
              {"P", "P_hat", "Pi", "Phi", "beta", "a_tilde", "b_tilde", "Ex0"},
              {&c.P, &c.P_hat, &c.Pi, &c.Phi, &c.beta, &c.a_tilde, &c.b_tilde, &c.Ex0});
}

inline void run_solve_po(const Model& model, const Options& opt, OutputSet& outs) {
  const POConsistency c = solve_po_consistency(model);
  std::vector<ScalarPath> entries;
  std::vector<std::string> names{"Pf"};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      names.push_back("pi" + std::to_string(a + 1) + std::to_string(b + 1));
      entries.push_back(map_nodes(model.grid, [&](int k) { return c.pi[k](a, b); }));
    }
  }
  for (int a = 0; a < 3; ++a) {
    names.push_back("gamma" + std::to_string(a + 1));
    entries.push_back(map_nodes(model.grid, [&](int k) { return c.gamma[k](a); }));
  }
  std::vector<const ScalarPath*> paths{&c.Pf};
  for (const auto& e : entries) paths.push_back(&e);
  for (const auto* p : {&c.A_tilde, &c.B_tilde, &c.C, &c.D, &c.f, &c.g, &c.mean}) paths.push_back(p);
  names.insert(names.end(), {"A_tilde", "B_tilde", "C", "D", "f", "g", "mean"});
  write_paths(outs, "consistency_po", opt.format, model.grid, names, paths);
}

inline void dump_replication(OutputSet& outs, const PopulationTrajectory& tr, int rep) {
  auto f = outs.open("paths_rep" + std::to_string(rep) + ".csv");
  CsvWriter w(f);
  const int N = tr.agents();
  std::vector<std::string> header{"t"};
  for (int i = 0; i < N; ++i) header.push_back("x_" + std::to_string(i + 1));
  for (int i = 0; i < N; ++i) header.push_back("xhat_" + std::to_string(i + 1));
  header.insert(header.end(), {"xN", "x0"});
  if (tr.mode == InfoMode::PartialObservation) header.push_back("xhat_limit");
  w.header(header);
  for (int k = 0; k < tr.grid.nodes(); ++k) {
    std::vector<double> row{tr.grid.time(k)};
    for (int i = 0; i < N; ++i) row.push_back(tr.states(i, k));
    for (int i = 0; i < N; ++i) row.push_back(tr.filters(i, k));
    row.push_back(tr.state_avg[static_cast<std::size_t>(k)]);
    row.push_back(tr.x0[k]);
    if (tr.mode == InfoMode::PartialObservation) row.push_back(tr.xhat_limit[k]);
    w.row(row);
  }
}

inline void run_simulate(const Model& model, const Options& opt, OutputSet& outs, int threads) {
  const EquilibriumSimulator sim(model);
  const int N = model.population.agents;
  const int reps = model.population.reps;
  std::vector<double> pop(static_cast<std::size_t>(reps)), lim(pop.size());
  std::vector<std::optional<PopulationTrajectory>> kept(opt.dump_paths ? pop.size() : 0);
  parallel_for(reps, threads, [&](int r) {
    PopulationTrajectory tr = sim.run(sim.noise(N, model.population.seed, static_cast<std::uint64_t>(r)));
    double p = 0, l = 0;
    for (int i = 0; i < N; ++i) {
      p += realized_cost(tr, model, CostMode::Population, i);
      l += realized_cost(tr, model, CostMode::Limiting, i);
    }
    pop[static_cast<std::size_t>(r)] = p / N;
    lim[static_cast<std::size_t>(r)] = l / N;
    if (opt.dump_paths) kept[static_cast<std::size_t>(r)] = std::move(tr);
  });
  const Estimate ep = summarize(pop);
  const Estimate el = summarize(lim);
  if (opt.format == "json") {
    nlohmann::json j;
    j["N"] = N;
    j["reps"] = reps;
    j["population_cost"] = to_json(ep);
    j["limiting_cost"] = to_json(el);
    j["per_replication"] = {{"population_cost", pop}, {"limiting_cost", lim}};
    outs.write_json("simulation.json", j);
  } else {
    auto f = outs.open("simulation.csv");
    CsvWriter w(f);
    w.header({"replication", "population_cost", "limiting_cost"});
    for (int r = 0; r < reps; ++r) w.row(r, pop[static_cast<std::size_t>(r)], lim[static_cast<std::size_t>(r)]);
  }
  for (std::size_t r = 0; r < kept.size(); ++r) dump_replication(outs, *kept[r], static_cast<int>(r));
}

inline std::vector<int> study_agents(const Options& opt) {
  return opt.agents.empty() ? std::vector<int>{16, 64, 256, 1024} : opt.agents;
}

inline void run_study_convergence(const Model& model, const Options& opt, OutputSet& outs, int threads) {
  StudyOptions so;
  so.agents = study_agents(opt);
  so.reps = model.population.reps;
  so.seed = model.population.seed;
  so.threads = threads;
  so.enforce_precision = !opt.allow_imprecise;
  so.antithetic = !opt.no_antithetic;
  const StudyResult r = run_convergence_study(model, so);
  if (opt.format == "json") {
    outs.write_json("convergence.json", to_json(r));
    return;
  }
  auto f = outs.open("convergence.csv");
  CsvWriter w(f);
  w.header({"N", "quantity", "estimate", "stderr"});
  for (const auto& q : r.quantities) {
    for (const auto& e : q.per_n) w.row(e.agents, q.name, e.mean, e.se);
  }
  auto g = outs.open("convergence_slopes.csv");
  CsvWriter ws(g);
  ws.header({"quantity", "slope", "half_width"});
  for (const auto& q : r.quantities) {
    if (q.fit) {
      ws.row(q.name, q.fit->slope, q.fit->half_width);
    } else {
      ws.row(q.name, "nan", "nan");
    }
  }
}

inline void run_study_nash(const Model& model, const Options& opt, OutputSet& outs, int threads) {
  NashOptions no;
  no.agents = study_agents(opt);
  no.reps = model.population.reps;
  no.seed = model.population.seed;
  no.threads = threads;
  no.enforce_precision = !opt.allow_imprecise;
  no.antithetic = !opt.no_antithetic;
  const NashGapReport r = run_nash_gap_study(model, no);
  if (opt.format == "json") {
    outs.write_json("nash.json", to_json(r));
    return;
  }
  auto f = outs.open("nash.csv");
  CsvWriter w(f);
  w.header({"N", "deviation", "cost", "cost_stderr", "gap", "gap_stderr", "limiting_gap", "limiting_gap_stderr"});
  for (const auto& row : r.rows) {
    w.row(row.agents, "equilibrium", row.equilibrium_cost.mean, row.equilibrium_cost.se, 0.0, 0.0, 0.0, 0.0);
    for (const auto& g : row.gaps) {
      w.row(row.agents, g.label, g.deviated_cost.mean, g.deviated_cost.se, g.gap.mean, g.gap.se, g.limiting_gap.mean,
            g.limiting_gap.se);
    }
  }
  auto e = outs.open("nash_epsilon.csv");
  CsvWriter we(e);
  we.header({"N", "epsilon", "epsilon_raw", "epsilon_stderr"});
  for (const auto& row : r.rows) we.row(row.agents, row.epsilon, row.epsilon_raw, row.epsilon_se);
}

inline void add_common_flags(CLI::App* sub, Options& o, bool studies) {
  sub->add_option("--config", o.config, "Model config (JSON)")->required();
  sub->add_option("--seed", o.seed, "Override the config seed");
  sub->add_option("--out-dir", o.out_dir, "Output directory");
  sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--threads", o.threads, "Worker threads (fallback: MFLQG_THREADS)")->check(CLI::PositiveNumber);
  sub->add_option("--reps", o.reps, "Replications")->check(CLI::PositiveNumber);
  sub->add_option("--N", o.agents, "Agent count(s)")->delimiter(',')->check(CLI::PositiveNumber);
  if (studies) {
    sub->add_flag("--allow-imprecise", o.allow_imprecise, "Report instead of failing on large standard errors");
    sub->add_flag("--no-antithetic", o.no_antithetic, "Plain Monte Carlo without mirrored replications");
  }
}

inline void write_error(const Options& opt, const std::string& kind, const std::string& stage,
                        const std::string& message, std::ostream& err) {
  nlohmann::json j = {{"error", kind}, {"stage", stage}, {"message", message}};
  err << "error [" << stage << "] " << kind << ": " << message << '\n';
  try {
    std::filesystem::create_directories(opt.out_dir);
    std::ofstream f(std::filesystem::path(opt.out_dir) / "error.json", std::ios::binary);
    f << j.dump(2) << '\n';
  } catch (const std::exception&) {
  }
}

// Returns the process exit code: 0 success, 1 solver/simulation failure, 2 usage.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Linear-quadratic mean-field games under partial information", "mflqg"};
  app.require_subcommand(1);
  Options o;
  struct Sub {
    const char* name;
    const char* help;
    bool study;
  };
  const Sub subs[] = {{"solve-pf", "Solve the partial-filtration consistency system", false},
                      {"solve-po", "Solve the partial-observation consistency system", false},
                      {"simulate", "Simulate the finite population under the equilibrium strategy", false},
                      {"study-convergence", "Finite-N convergence rates", true},
                      {"study-nash", "Unilateral deviation gaps", true}};
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common_flags(sub, o, s.study);
    if (std::string(s.name) == "simulate") sub->add_flag("--dump-paths", o.dump_paths, "One CSV per replication");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return 2;
  }
  o.command = app.get_subcommands().front()->get_name();

  const auto start = std::chrono::steady_clock::now();
  std::string stage = "config";
  OutputSet outs(o.out_dir);
  try {
    const std::string text = read_text_file(o.config);
    ModelSpec spec = parse_model_spec(text);
    if (o.seed) spec.population.seed = *o.seed;
    if (o.reps) spec.population.reps = *o.reps;
    if (!o.agents.empty() && o.command != "study-convergence" && o.command != "study-nash") {
      spec.population.agents = o.agents.front();
    }
    if (o.command == "solve-pf") spec.population.mode = InfoMode::PartialFiltration;
    if (o.command == "solve-po") spec.population.mode = InfoMode::PartialObservation;
    const Model model = build_model(spec);
    const int threads = resolve_threads(o.threads);

    if (o.command == "solve-pf") {
      stage = "consistency";
      run_solve_pf(model, o, outs);
    } else if (o.command == "solve-po") {
      stage = "consistency";
      run_solve_po(model, o, outs);
    } else if (o.command == "simulate") {
      stage = "simulation";
      run_simulate(model, o, outs, threads);
    } else if (o.command == "study-convergence") {
      stage = "study";
      run_study_convergence(model, o, outs, threads);
    } else {
      stage = "study";
      run_study_nash(model, o, outs, threads);
    }

    stage = "output";
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    nlohmann::json m;
    m["tool_version"] = kVersion;
    m["subcommand"] = o.command;
    m["config"] = o.config;
    m["config_hash"] = "fnv1a64:" + hex64(fnv1a64(text));
    m["seed"] = model.population.seed;
    m["grid"] = {{"T", model.grid.horizon()}, {"M", model.grid.steps()}};
    m["population"] = {{"mode", mode_name(model.population.mode)},
                       {"N", o.command.rfind("study", 0) == 0 ? nlohmann::json(study_agents(o))
                                                              : nlohmann::json(model.population.agents)},
                       {"reps", model.population.reps},
                       {"po_common_noise_feed",
                        model.population.feed == CommonNoiseFeed::FilterGain ? "gain" : "off"}};
    m["format"] = o.format;
    m["outputs"] = outs.names();
    m["wall_clock_seconds"] = seconds;
    std::ofstream f(outs.dir() / "manifest.json", std::ios::binary);
    f << m.dump(2) << '\n';
    out << "wrote " << outs.names().size() << " file(s) and manifest.json to " << outs.dir().string() << '\n';
    return 0;
  } catch (const Error& e) {
    write_error(o, e.kind(), stage, e.what(), err);
  } catch (const std::exception& e) {
    write_error(o, "InternalError", stage, e.what(), err);
  }
  return 1;
}

}  // namespace mflqg::cli
