// ermlab: bound evaluation, simulation and verification front end.
//
// Exit codes: 0 pass, 1 bound violation, 2 configuration error, 3 I/O error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ermlab/bounds.hpp"
#include "ermlab/config.hpp"
#include "ermlab/experiments.hpp"

namespace {

using namespace ermlab;

constexpr int kPass = 0;
constexpr int kViolation = 1;
constexpr int kConfig = 2;
constexpr int kIo = 3;

struct BoundFlags {
  std::string lemma;
  std::map<std::string, double> v;
  std::map<std::string, CLI::Option*> opt;

  bool has(const std::string& k) const { return opt.at(k)->count() > 0; }
  double get(const std::string& k) const {
    if (!has(k)) throw ConfigError("--lemma " + lemma + " requires --" + k);
    return v.at(k);
  }
  std::optional<double> maybe(const std::string& k) const {
    return has(k) ? std::optional<double>(v.at(k)) : std::nullopt;
  }
  Complexity complexity() const {
    if (has("delta")) return Complexity::with_delta(get("delta"), maybe("n").value_or(1.0), maybe("p").value_or(1.0));
    return Complexity::of(get("n"), get("p"));
  }
  Mode mode() const {
    if (has("t") && has("m")) throw ConfigError("give either --t or --m, not both");
    if (has("t")) return Mode::tail(get("t"));
    return Mode::moment(get("m"));
  }
  TailSpec tail() const {
    if (has("K") && (has("s") || has("M"))) throw ConfigError("give either --K or --s/--M, not both");
    if (has("K")) return ExpMomentTail{get("K")};
    return PowerTail{get("s"), get("M")};
  }
};

json constants_json(const ConstantSet& c) {
  json j;
  j["kappa"] = c.kappa;
  j["s"] = c.s;
  j["m"] = c.m;
  j["A"] = c.A;
  j["A_display"] = c.A_display;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  const auto put = [&](const char* k, const std::optional<double>& x) { j[k] = x ? json(*x) : json(nullptr); };
  put("xi", c.xi);
  put("B", c.B);
  put("c_ms", c.c_ms);
  put("c_prime_ms", c.c_prime_ms);
  put("ctilde", c.ctilde);
  j["xi_valid"] = c.xi_valid();
  j["c_valid"] = c.c_valid();
  return j;
}

json evaluate_lemma(const BoundFlags& f) {
  const std::string& l = f.lemma;
  if (l == "2.1") return to_json(bound_bernstein(f.complexity(), f.get("K"), f.mode()));
  if (l == "c2.1") return to_json(bound_bernstein(f.complexity(), f.get("K"), f.mode(), f.get("tau")));
  if (l == "4.1") return to_json(bound_quadratic_exp(f.complexity(), f.get("C"), f.get("K"), f.get("estar"), f.mode()));
  if (l == "4.2") return to_json(bound_mle(f.complexity(), f.get("C"), f.get("estar"), f.mode()));
  if (l == "5.1") {
    return to_json(bound_quadratic_power(f.complexity(), f.get("C"), f.get("s"), f.get("M"), f.get("estar"), f.get("m")));
  }
  if (l == "5.3") return to_json(bound_small_p_ls(f.get("n"), f.get("p"), f.get("C"), f.get("s"), f.get("M"), f.get("estar")));
  if (l == "6.1") {
    const auto spec = MarginSpec::power(f.maybe("kappa").value_or(1.0), f.get("C"));
    return to_json(bound_general_margin_expectation(spec, f.complexity(), f.get("K"), f.get("estar"),
                                                    f.maybe("delta-opt").value_or(0.5), f.maybe("eps").value_or(1e-12),
                                                    f.maybe("r").value_or(2.0)));
  }
  if (l == "6.2" || l == "7.1ii") {
    const auto tau = l == "7.1ii" ? f.maybe("tau") : std::nullopt;
    return to_json(bound_general_margin_exp(f.complexity(), f.get("kappa"), f.get("C"), f.get("K"), f.get("estar"),
                                            f.mode(), tau));
  }
  if (l == "7.1i") {
    return to_json(bound_master_power(f.complexity(), f.get("kappa"), f.get("C"), f.get("s"), f.get("M"), f.get("estar"),
                                      f.get("m"), f.get("tau")));
  }
  if (l == "c7.1") {
    return to_json(bound_corollary71(f.complexity(), f.get("kappa"), f.get("C"), f.tail(), f.get("estar"), f.get("m")));
  }
  if (l == "constants") return constants_json(evaluate_constants(f.get("kappa"), f.get("s"), f.get("m")));
  if (l == "asymptotic") {
    json j;
    j["bound"] = "asymptotic_diagnostic";
    j["value"] = asymptotic_diagnostic(f.complexity(), f.get("kappa"), f.get("C"), f.tail(), f.get("estar"));
    return j;
  }
  throw ConfigError("unknown --lemma '" + l + "'");
}

void write_file(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> workers;
  std::string out;
};

void add_run_flags(CLI::App* sub, RunFlags& rf) {
  sub->add_option("--config", rf.config, "run configuration (JSON)")->required();
  sub->add_option("--seed", rf.seed, "master seed (overrides the config)");
  sub->add_option("--reps", rf.reps, "replications (overrides the config)")->check(CLI::PositiveNumber);
  sub->add_option("--workers", rf.workers, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", rf.out, "output directory");
}

RunConfig load(const RunFlags& rf) {
  auto cfg = load_run_config(rf.config);
  if (rf.seed) cfg.seed = *rf.seed;
  if (rf.reps) cfg.reps = *rf.reps;
  if (rf.workers) cfg.workers = *rf.workers;
  if (!rf.out.empty()) {
    const std::filesystem::path dir(rf.out);
    cfg.out.trials = (dir / "trials.csv").string();
    cfg.out.summary = (dir / "summary.json").string();
    cfg.out.verdicts = (dir / "verdicts.json").string();
  }
  return cfg;
}

int cmd_simulate(const RunFlags& rf) {
  const auto cfg = load(rf);
  const auto pb = build_problem(cfg.problem, cfg.base_dir);
  const auto trials = run_trials(pb, cfg.reps, cfg.seed, cfg.workers, cfg.alpha);
  const auto summary = estimate(pb, trials, cfg.moments, cfg.thresholds);
  json doc = to_json(summary);
  doc["reps"] = cfg.reps;
  doc["seed"] = cfg.seed;
  doc["n"] = pb.n();
  doc["p"] = pb.p();
  if (pb.lower_bound_level) doc["lower_bound_level"] = *pb.lower_bound_level;
  if (cfg.out.trials) {
    std::ostringstream csv;
    write_trials_csv(csv, trials, pb.risk.estar);
    write_file(*cfg.out.trials, csv.str());
  }
  if (cfg.out.summary) write_file(*cfg.out.summary, doc.dump(2) + "\n");
  std::cout << doc.dump(2) << "\n";
  return kPass;
}

int cmd_verify(const RunFlags& rf) {
  const auto cfg = load(rf);
  if (cfg.checks.empty()) throw ConfigError("config names no checks");
  const auto pb = build_problem(cfg.problem, cfg.base_dir);
  const auto trials = run_trials(pb, cfg.reps, cfg.seed, cfg.workers, cfg.alpha);
  const auto verdicts = verify(pb, trials, cfg.checks, cfg.alpha);
  json doc;
  doc["pass"] = all_pass(verdicts);
  doc["verdicts"] = json::array();
  for (const auto& v : verdicts) doc["verdicts"].push_back(to_json(v));
  if (cfg.out.trials) {
    std::ostringstream csv;
    write_trials_csv(csv, trials, pb.risk.estar);
    write_file(*cfg.out.trials, csv.str());
  }
  if (cfg.out.verdicts) write_file(*cfg.out.verdicts, doc.dump(2) + "\n");
  std::cout << doc.dump(2) << "\n";
  return all_pass(verdicts) ? kPass : kViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ERM oracle-inequality laboratory"};
  app.require_subcommand(1);

  BoundFlags bf;
  auto* bounds = app.add_subcommand("bounds", "evaluate a closed-form bound and print it as JSON");
  bounds->add_option("--lemma", bf.lemma, "2.1 c2.1 4.1 4.2 5.1 5.3 6.1 6.2 7.1i 7.1ii c7.1 constants asymptotic")
      ->required();
  for (const char* k : {"n", "p", "m", "t", "kappa", "C", "K", "s", "M", "estar", "tau", "delta", "delta-opt", "eps", "r"}) {
    bf.opt[k] = bounds->add_option(std::string("--") + k, bf.v[k]);
  }

  RunFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "run replicated trials; write trials CSV and summary JSON");
  add_run_flags(simulate, sim_flags);

  RunFlags ver_flags;
  auto* verify_cmd = app.add_subcommand("verify", "run trials and check the configured bounds");
  add_run_flags(verify_cmd, ver_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (bounds->parsed()) {
      std::cout << evaluate_lemma(bf).dump(2) << "\n";
      return kPass;
    }
    if (simulate->parsed()) return cmd_simulate(sim_flags);
    return cmd_verify(ver_flags);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
}
