// atlas_cli: sample, simulate, verify and bench front end.
//
// Options come from flags, then an optional JSON --config file, then
// defaults, in that order of precedence. Every command writes into --out and
// refuses to replace existing files unless --force is given.
//
// Exit codes: 0 pass, 1 fail, 2 usage/validation, 3 inconclusive.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "atlas/core.hpp"
#include "atlas/dynamics.hpp"
#include "atlas/rng.hpp"
#include "atlas/samplers.hpp"
#include "atlas/stats/report.hpp"
#include "atlas/suites.hpp"
#include "atlas/version.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace atlas;

namespace {

constexpr int exit_pass = 0;
constexpr int exit_fail = 1;
constexpr int exit_usage = 2;
constexpr int exit_inconclusive = 3;

constexpr const char* manifest_schema = "atlas-run-manifest/1";

/// Usage problems detected after parsing (existing outputs, bad config).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest decimal that round-trips to the same double.
std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

struct Options {
  // model
  double a = 1.0;
  double gamma = 0.5;
  std::vector<double> drifts;
  // sizes
  std::size_t n = 100;
  std::size_t m = 5;
  std::size_t draws = 1000;
  std::optional<std::size_t> replicas;
  std::optional<std::size_t> verify_n;
  std::optional<double> verify_dt;
  // dynamics
  double dt = 1e-3;
  std::size_t steps = 1000;
  std::size_t record_every = 1;
  std::string scheme = "hard";
  double beta = 50.0;
  std::string shift = "on";
  std::string init = "qa";
  // sampler
  std::string law = "Qa";
  double zeta = 5.0;
  // verify / bench
  std::string suite = "sampler";
  std::vector<double> xi_grid;
  std::vector<std::size_t> n_grid{100, 1000};
  // run
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out = "atlas-out";
  bool force = false;
  std::string config;
};

ModelParams model(const Options& o) {
  ModelParams p{o.gamma, o.a, std::nullopt};
  if (!o.drifts.empty()) p.ranked_drifts = o.drifts;
  return p;
}

SimulationConfig sim_config(const Options& o) {
  SimulationConfig cfg;
  cfg.n = o.n;
  cfg.dt = o.dt;
  cfg.steps = o.steps;
  cfg.record_every = o.record_every;
  cfg.seed = o.seed;
  cfg.shift = o.shift == "on";
  if (o.scheme == "mollified") {
    cfg.scheme = MollifiedDrift{o.beta};
  } else {
    cfg.scheme = HardDrift{};
  }
  return cfg;
}

// ------------------------------------------------------------ config file

std::string json_to_flag_value(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) {
      if (!s.empty()) s += ",";
      s += json_to_flag_value(e);
    }
    return s;
  }
  if (v.is_number_float()) return fmt(v.get<double>());
  return v.dump();
}

/// Fills every option the command line left unset from the JSON config.
/// A run manifest is accepted too: its "config" block is used.
void apply_config(CLI::App& sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (doc.contains("schema") && doc.contains("config")) {
    if (doc.contains("command") && doc["command"] != sub.get_name()) {
      throw UsageError("manifest was written by '" + doc["command"].get<std::string>() +
                       "', not '" + sub.get_name() + "'");
    }
    doc = doc["config"];
  }
  if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "config" || key == "out" || key == "force") continue;
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr) throw UsageError("unknown config key '" + key + "'");
    if (opt->count() > 0 || value.is_null()) continue;
    if (value.is_array()) {
      for (const auto& e : value) opt->add_result(json_to_flag_value(e));
    } else {
      opt->add_result(json_to_flag_value(value));
    }
    opt->run_callback();
  }
}

// ----------------------------------------------------------------- output

class OutputDir {
 public:
  OutputDir(const std::string& dir, bool force, std::vector<std::string> files)
      : dir_(dir), files_(std::move(files)) {
    for (const auto& f : files_) {
      if (fs::exists(dir_ / f) && !force) {
        throw UsageError("refusing to overwrite " + (dir_ / f).string() + " (use --force)");
      }
    }
    fs::create_directories(dir_);
  }

  std::ofstream open(const std::string& name) const {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    return out;
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

ordered_json config_echo(const Options& o, const std::string& command) {
  ordered_json c;
  auto params = [&] {
    c["a"] = o.a;
    c["gamma"] = o.gamma;
    if (!o.drifts.empty()) c["drifts"] = o.drifts;
  };
  if (command == "sample") {
    c["law"] = o.law;
    params();
    c["m"] = o.m;
    c["n-draws"] = o.draws;
    if (o.law == "Pa-restricted") c["zeta"] = o.zeta;
  } else if (command == "simulate") {
    params();
    c["n"] = o.n;
    c["m"] = o.m;
    c["dt"] = o.dt;
    c["steps"] = o.steps;
    c["record-every"] = o.record_every;
    c["scheme"] = o.scheme;
    if (o.scheme == "mollified") c["beta"] = o.beta;
    c["shift"] = o.shift;
    c["init"] = o.init;
  } else if (command == "verify") {
    c["suite"] = o.suite;
    if (o.replicas) c["replicas"] = *o.replicas;
    if (!o.xi_grid.empty()) c["xi-grid"] = o.xi_grid;
    if (o.verify_n) c["n"] = *o.verify_n;
    if (o.verify_dt) c["dt"] = *o.verify_dt;
  } else if (command == "bench") {
    c["n"] = o.n_grid;
    c["dt"] = o.dt;
    c["steps"] = o.steps;
    c["beta"] = o.beta;
  }
  c["seed"] = o.seed;
  c["threads"] = o.threads;
  return c;
}

void write_manifest(const OutputDir& out, const Options& o, const std::string& command,
                    const std::string& started, double seconds,
                    const std::vector<StatReport>& reports, int exit_code) {
  ordered_json m;
  m["schema"] = manifest_schema;
  m["tool"] = "atlas_cli";
  m["version"] = atlas::version;
  m["command"] = command;
  m["config"] = config_echo(o, command);
  m["seed"] = o.seed;
  m["started_utc"] = started;
  m["finished_utc"] = utc_now();
  m["wall_seconds"] = seconds;
  m["outputs"] = out.files();
  ordered_json verdicts = ordered_json::array();
  for (const auto& r : reports) {
    verdicts.push_back({{"name", r.name}, {"verdict", std::string(to_string(r.verdict))}});
  }
  m["verdicts"] = verdicts;
  m["exit_code"] = exit_code;
  out.open("manifest.json") << m.dump(2) << "\n";
}

ordered_json report_json(const StatReport& r) {
  ordered_json j;
  j["name"] = r.name;
  j["estimate"] = num(r.estimate);
  j["target"] = num(r.target);
  j["se"] = num(r.std_error);
  j["statistic"] = num(r.statistic);
  j["p"] = num(r.p_value);
  j["verdict"] = std::string(to_string(r.verdict));
  j["gating"] = r.gating;
  j["n"] = r.n_samples;
  j["rule"] = r.rule;
  if (!r.extras.empty()) {
    ordered_json e;
    for (const auto& [k, v] : r.extras) e[k] = num(v);
    j["extras"] = e;
  }
  return j;
}

int exit_code_for(Verdict v) {
  switch (v) {
    case Verdict::fail: return exit_fail;
    case Verdict::inconclusive: return exit_inconclusive;
    default: return exit_pass;
  }
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// --------------------------------------------------------------- commands

int cmd_sample(const Options& o) {
  const std::string started = utc_now();
  const Stopwatch clock;
  const ModelParams p = model(o);
  if (o.law != "pi") require_valid(p);
  if (o.m < 1) throw InvalidInput("m must be >= 1");
  const bool gap_law = o.law == "pi_a" || o.law == "pi";
  const bool restricted = o.law == "Pa-restricted";
  auto draw = [&](RngStream& rng) -> std::vector<double> {
    if (o.law == "Qa") return sample_Q_a(p, o.m, rng).sorted;
    if (o.law == "Pa") return sample_P_a(p, o.m, rng).sorted;
    if (restricted) {
      auto pts = sample_P_a_restricted(p, o.zeta, rng).sorted;
      std::sort(pts.begin(), pts.end());
      return pts;
    }
    if (o.law == "pi_a") return sample_pi_a_gaps(p, o.m, rng).values;
    if (o.law == "pi") return sample_pi_gaps(o.gamma, o.m, rng).values;
    return renyi_ranked_exponentials(o.m, o.a, rng);
  };
  {
    // Surface sampler preconditions before anything is written.
    RngStream probe(o.seed, 1);
    draw(probe);
  }
  const OutputDir out(o.out, o.force, {"draws.csv", "manifest.json"});

  RngStream rng(o.seed);
  std::ofstream csv = out.open("draws.csv");
  const char* col = gap_law ? "z" : (o.law == "renyi" ? "y" : "x");
  if (restricted) csv << "count,";
  for (std::size_t i = 1; i <= o.m; ++i) csv << col << i << (i < o.m ? "," : "\n");
  for (std::size_t d = 0; d < o.draws; ++d) {
    const std::vector<double> row = draw(rng);
    // Restricted draws have a random count; the first m points are written.
    if (restricted) csv << row.size() << ",";
    for (std::size_t i = 0; i < o.m; ++i) {
      if (i < row.size()) csv << fmt(row[i]);
      csv << (i + 1 < o.m ? "," : "\n");
    }
  }
  csv.close();
  write_manifest(out, o, "sample", started, clock.seconds(), {}, exit_pass);
  std::cout << "wrote " << o.draws << " draws of " << o.law << " to " << o.out << "/draws.csv\n";
  return exit_pass;
}

LabeledConfiguration initial_state(const Options& o, const ModelParams& p, RngStream& rng) {
  if (o.init == "qa") return sample_Q_a(p, o.n, rng).labeled();
  std::vector<double> x(o.n, 0.0);
  if (o.init == "zero" || o.n == 1) return LabeledConfiguration{x};
  const GapVector z = o.init == "pi" ? sample_pi_gaps(o.gamma, o.n - 1, rng)
                                     : sample_pi_a_gaps(p, o.n - 1, rng);
  for (std::size_t i = 1; i < o.n; ++i) x[i] = x[i - 1] + z.values[i - 1];
  return LabeledConfiguration{x};
}

int cmd_simulate(const Options& o) {
  const std::string started = utc_now();
  const Stopwatch clock;
  const ModelParams p = model(o);
  require_valid(p);
  const SimulationConfig cfg = sim_config(o);
  validate(cfg);
  RngStream rng(o.seed);
  const LabeledConfiguration init = initial_state(o, p, rng);
  Integrator(init, cfg, p);  // throws on inconsistent inputs before any output
  const OutputDir out(o.out, o.force, {"trajectory.csv", "report.json", "manifest.json"});
  const TrajectoryRecord rec = simulate(init, cfg, p, rng);

  std::ofstream csv = out.open("trajectory.csv");
  csv << "t,rank,position" << (cfg.shift ? ",compensation\n" : "\n");
  for (std::size_t k = 0; k < rec.times.size(); ++k) {
    const double t = rec.times[k];
    const std::string ts = fmt(t);
    const std::string comp = cfg.shift ? "," + fmt(0.5 * p.a * t) : "";
    const auto& sorted = rec.snapshots[k].sorted;
    for (std::size_t r = 0; r < sorted.size(); ++r) {
      csv << ts << "," << (r + 1) << "," << fmt(sorted[r]) << comp << "\n";
    }
  }
  csv.close();

  ordered_json report;
  report["records"] = rec.times.size();
  report["horizon"] = cfg.horizon();
  std::vector<StatReport> verdicts;
  if (o.n >= 2) {
    const std::size_t m = std::min(o.m, o.n - 1);
    const TruncationReport tr = truncation_diagnostic(rec, m);
    report["truncation"] = {{"ranks", m},
                            {"min_separation", num(tr.min_separation)},
                            {"threshold", num(tr.threshold)},
                            {"top_entered_low_ranks", tr.top_entered_low_ranks},
                            {"clean", tr.clean}};
    StatReport r;
    r.name = "truncation diagnostic clean";
    r.verdict = tr.clean ? Verdict::pass : Verdict::inconclusive;
    verdicts.push_back(r);
    std::cout << "truncation diagnostic (ranks 1.." << m << "): "
              << (tr.clean ? "clean" : "DIRTY") << ", min separation " << tr.min_separation
              << ", threshold " << tr.threshold << "\n";
  } else {
    report["truncation"] = nullptr;
  }
  out.open("report.json") << report.dump(2) << "\n";
  write_manifest(out, o, "simulate", started, clock.seconds(), verdicts, exit_pass);
  std::cout << "wrote " << rec.times.size() << " records to " << o.out << "/trajectory.csv\n";
  return exit_pass;
}

void print_table(const std::vector<StatReport>& reports) {
  auto cell = [](double v) {
    std::ostringstream os;
    if (std::isfinite(v)) {
      os << std::setprecision(5) << v;
    } else {
      os << "-";
    }
    return os.str();
  };
  std::cout << std::left << std::setw(64) << "check" << std::setw(14) << "verdict" << std::setw(13)
            << "estimate" << std::setw(13) << "target" << std::setw(11) << "SE" << std::setw(11)
            << "statistic" << "p\n";
  for (const auto& r : reports) {
    std::string v(to_string(r.verdict));
    if (!r.gating) v += "*";
    std::cout << std::left << std::setw(64) << r.name << std::setw(14) << v << std::setw(13)
              << cell(r.estimate) << std::setw(13) << cell(r.target) << std::setw(11)
              << cell(r.std_error) << std::setw(11) << cell(r.statistic) << cell(r.p_value) << "\n";
  }
}

int cmd_verify(const Options& o) {
  const std::string started = utc_now();
  const Stopwatch clock;
  const OutputDir out(o.out, o.force, {"report.json", "manifest.json"});
  suites::SuiteOptions so;
  so.seed = o.seed;
  so.threads = o.threads;
  so.replicas = o.replicas;
  so.xi_grid = o.xi_grid;
  so.n = o.verify_n;
  so.dt = o.verify_dt;
  const std::vector<StatReport> reports = suites::run_suite(o.suite, so);
  const Verdict overall = overall_verdict(reports);
  print_table(reports);
  std::cout << "overall: " << to_string(overall) << "  (* = shown, not gating)\n";

  ordered_json rep;
  rep["suite"] = o.suite;
  rep["seed"] = o.seed;
  rep["overall"] = std::string(to_string(overall));
  ordered_json checks = ordered_json::array();
  for (const auto& r : reports) checks.push_back(report_json(r));
  rep["checks"] = checks;
  out.open("report.json") << rep.dump(2) << "\n";
  const int code = exit_code_for(overall);
  write_manifest(out, o, "verify", started, clock.seconds(), reports, code);
  return code;
}

int cmd_bench(const Options& o) {
  const std::string started = utc_now();
  const Stopwatch total;
  const OutputDir out(o.out, o.force, {"bench.csv", "manifest.json"});
  const ModelParams p{o.gamma, o.a, std::nullopt};
  require_valid(p);
  struct Case {
    std::string scheme;
    DriftScheme drift;
  };
  const std::vector<Case> schemes{{"hard", HardDrift{}}, {"mollified", MollifiedDrift{o.beta}}};
  const std::vector<std::pair<std::string, RankingKernel>> kernels{
      {"argmin", RankingKernel::argmin_scan}, {"incremental", RankingKernel::incremental}};

  std::ofstream csv = out.open("bench.csv");
  const std::string header = "n,dt,scheme,kernel,steps,seconds,steps_per_second,particle_steps_per_second\n";
  csv << header;
  std::cout << header;
  int code = exit_pass;
  for (std::size_t n : o.n_grid) {
    for (const auto& sc : schemes) {
      SimulationConfig cfg;
      cfg.n = n;
      cfg.dt = o.dt;
      cfg.steps = o.steps;
      cfg.scheme = sc.drift;
      cfg.shift = true;
      validate(cfg);
      RngStream init_rng(o.seed);
      const LabeledConfiguration init = sample_Q_a(p, n, init_rng).labeled();
      std::vector<std::vector<double>> finals;
      for (const auto& [kname, kernel] : kernels) {
        cfg.kernel = kernel;
        Integrator integ(init, cfg, p);
        RngStream rng(o.seed, 1);
        const Stopwatch clock;
        for (std::size_t k = 0; k < cfg.steps; ++k) integ.advance(rng);
        const double s = clock.seconds();
        finals.emplace_back(integ.positions().begin(), integ.positions().end());
        const double sps = s > 0.0 ? static_cast<double>(cfg.steps) / s : 0.0;
        std::ostringstream line;
        line << n << "," << fmt(o.dt) << "," << sc.scheme << "," << kname << "," << cfg.steps << ","
             << s << "," << sps << "," << sps * static_cast<double>(n) << "\n";
        csv << line.str();
        std::cout << line.str();
      }
      // Correctness gate: both kernels must produce the same trajectory.
      if (finals[0] != finals[1]) {
        std::cerr << "kernel mismatch at n=" << n << ", scheme=" << sc.scheme << "\n";
        code = exit_fail;
      }
    }
  }
  csv.close();
  write_manifest(out, o, "bench", started, total.seconds(), {}, code);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Atlas model lab: exact samplers, particle dynamics and verification suites"};
  app.require_subcommand(1);
  app.set_version_flag("--version", atlas::version);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Root RNG seed")->capture_default_str();
    sub->add_option("--threads", o.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_flag("--force", o.force, "Overwrite existing outputs");
    sub->add_option("--config", o.config, "JSON config file or run manifest")
        ->check(CLI::ExistingFile);
  };
  auto model_flags = [&](CLI::App* sub) {
    sub->add_option("--a", o.a, "Intensity parameter a")->capture_default_str();
    sub->add_option("--gamma", o.gamma, "Atlas drift gamma")->capture_default_str();
  };

  CLI::App* sample = app.add_subcommand("sample", "Draw from P_a, Q_a, restricted P_a, pi_a, pi or the Renyi sums");
  common(sample);
  model_flags(sample);
  sample->add_option("--law", o.law, "Law to sample")
      ->check(CLI::IsMember({"Pa", "Qa", "Pa-restricted", "pi_a", "pi", "renyi"}))
      ->capture_default_str();
  sample->add_option("--m", o.m, "Points (or gaps) per draw")->capture_default_str();
  sample->add_option("--n-draws,--replicas", o.draws, "Number of draws")->capture_default_str();
  sample->add_option("--zeta", o.zeta, "Window edge for Pa-restricted")->capture_default_str();

  CLI::App* sim = app.add_subcommand("simulate", "Run the finite-n particle system and record ranked paths");
  common(sim);
  model_flags(sim);
  sim->add_option("--drifts", o.drifts, "Ranked drifts gamma_1,...,gamma_k (overrides the Atlas drift)")
      ->delimiter(',');
  sim->add_option("--n", o.n, "Particles")->capture_default_str();
  sim->add_option("--m", o.m, "Low ranks watched by the truncation diagnostic")->capture_default_str();
  sim->add_option("--dt", o.dt, "Step size")->capture_default_str();
  sim->add_option("--steps", o.steps, "Steps")->capture_default_str();
  sim->add_option("--record-every", o.record_every, "Record every k steps")->capture_default_str();
  sim->add_option("--scheme", o.scheme, "Drift scheme")
      ->check(CLI::IsMember({"hard", "mollified"}))
      ->capture_default_str();
  sim->add_option("--beta", o.beta, "Mollifier sharpness (mollified scheme)")->capture_default_str();
  sim->add_option("--shift", o.shift, "Add the a/2 compensation drift")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  sim->add_option("--init", o.init, "Initial law: qa, pi_a, pi (Atlas at 0) or zero")
      ->check(CLI::IsMember({"qa", "pi_a", "pi", "zero"}))
      ->capture_default_str();

  CLI::App* verify = app.add_subcommand("verify", "Run a verification suite");
  common(verify);
  verify->add_option("--suite", o.suite, "Suite name")->capture_default_str();
  verify->add_option("--replicas,--n-draws", o.replicas, "Override every draw/replica count");
  verify->add_option("--xi-grid", o.xi_grid, "Tail thresholds (comma list)")->delimiter(',');
  verify->add_option("--n", o.verify_n, "Override the particle count of the simulation checks");
  verify->add_option("--dt", o.verify_dt, "Override the step size of the simulation checks");

  CLI::App* bench = app.add_subcommand("bench", "Time the argmin-scan and incremental ranking kernels");
  common(bench);
  model_flags(bench);
  bench->add_option("--n", o.n_grid, "Particle counts (comma list)")->delimiter(',')->capture_default_str();
  bench->add_option("--dt", o.dt, "Step size")->capture_default_str();
  bench->add_option("--steps", o.steps, "Steps per timing")->capture_default_str();
  bench->add_option("--beta", o.beta, "Mollifier sharpness")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_pass : exit_usage;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    if (!o.config.empty()) apply_config(*chosen, o.config);
    if (chosen == sample) return cmd_sample(o);
    if (chosen == sim) return cmd_simulate(o);
    if (chosen == verify) {
      const auto& names = suites::suite_names();
      if (std::find(names.begin(), names.end(), o.suite) == names.end()) {
        throw UsageError("unknown suite '" + o.suite + "'");
      }
      return cmd_verify(o);
    }
    return cmd_bench(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_fail;
  }
}
