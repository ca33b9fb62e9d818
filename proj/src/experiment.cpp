#include "ncnes/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "ncnes/ncs.hpp"

namespace ncnes {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  parts.push_back(current);
  return parts;
}

// Section -> key -> value, preserving nothing but the last assignment.
using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

// Flat key-value text with [section] headers; '#' starts a comment.
RawConfig parse_raw(std::string_view text, std::vector<std::string>& errors) {
  RawConfig raw;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        errors.push_back("line " + std::to_string(line_no) +
                         ": malformed section header '" + t + "'");
        continue;
      }
      section = trim(t.substr(1, t.size() - 2));
      raw[section];
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(line_no) +
                       ": expected 'key = value', got '" + t + "'");
      continue;
    }
    if (section.empty()) {
      errors.push_back("line " + std::to_string(line_no) +
                       ": key outside of any [section]");
      continue;
    }
    raw[section][trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return raw;
}

class Resolver {
 public:
  Resolver(RawConfig raw, std::vector<std::string>& errors)
      : raw_(std::move(raw)), errors_(errors) {}

  std::optional<std::string> take(const std::string& section,
                                  const std::string& key) {
    auto s = raw_.find(section);
    if (s == raw_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    std::string value = k->second;
    s->second.erase(k);
    return value;
  }

  void set(const std::string& section, const std::string& key,
           std::string value) {
    raw_[section][key] = std::move(value);
  }

  void erase(const std::string& section, const std::string& key) {
    auto s = raw_.find(section);
    if (s != raw_.end()) s->second.erase(key);
  }

  long long take_int(const std::string& section, const std::string& key,
                     long long fallback) {
    auto value = take(section, key);
    if (!value) return fallback;
    try {
      std::size_t pos = 0;
      const long long parsed = std::stoll(*value, &pos);
      if (pos != value->size()) throw std::invalid_argument("trailing text");
      return parsed;
    } catch (const std::exception&) {
      errors_.push_back("[" + section + "] " + key + ": not an integer ('" +
                        *value + "')");
      return fallback;
    }
  }

  double take_real(const std::string& section, const std::string& key,
                   double fallback) {
    auto value = take(section, key);
    if (!value) return fallback;
    try {
      std::size_t pos = 0;
      const double parsed = std::stod(*value, &pos);
      if (pos != value->size()) throw std::invalid_argument("trailing text");
      return parsed;
    } catch (const std::exception&) {
      errors_.push_back("[" + section + "] " + key + ": not a number ('" +
                        *value + "')");
      return fallback;
    }
  }

  bool take_bool(const std::string& section, const std::string& key,
                 bool fallback) {
    auto value = take(section, key);
    if (!value) return fallback;
    if (*value == "true") return true;
    if (*value == "false") return false;
    errors_.push_back("[" + section + "] " + key +
                      ": expected true or false ('" + *value + "')");
    return fallback;
  }

  // Everything not consumed is unknown; typo safety.
  void report_unknown(const std::set<std::string>& known_sections) {
    for (const auto& [section, keys] : raw_) {
      if (known_sections.count(section) == 0) {
        errors_.push_back("unknown section [" + section + "]");
        continue;
      }
      for (const auto& [key, _] : keys) {
        errors_.push_back("unknown key '" + key + "' in section [" + section +
                          "]");
      }
    }
  }

  void error(std::string message) { errors_.push_back(std::move(message)); }

 private:
  RawConfig raw_;
  std::vector<std::string>& errors_;
};

std::optional<std::vector<double>> parse_real_list(const std::string& value) {
  std::vector<double> out;
  for (const std::string& part : split(value, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(trim(part), &pos));
      if (pos != trim(part).size()) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return out;
}

ParseResult resolve(RawConfig raw, std::vector<std::string> errors,
                    const ConfigOverrides& overrides) {
  Resolver r(std::move(raw), errors);

  // Command-line overrides behave as if the file contained these values.
  if (!overrides.seeds.empty()) {
    std::string joined;
    for (std::uint64_t s : overrides.seeds) {
      if (!joined.empty()) joined += ",";
      joined += std::to_string(s);
    }
    r.set("experiment", "seeds", joined);
  }
  if (overrides.mode) {
    r.set("exec", "mode", *overrides.mode);
    r.erase("exec", "workers");  // re-derive the default for the new mode
  }
  if (overrides.algo) r.set("experiment", "algo", *overrides.algo);
  if (overrides.out_dir) r.set("experiment", "out_dir", *overrides.out_dir);
  if (overrides.phi) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", *overrides.phi);
    r.set("run", "phi", buf);
  }

  ExperimentConfig cfg;

  // [objective]
  auto id = r.take("objective", "id");
  if (!id) {
    r.error("[objective] id is required");
  } else {
    cfg.objective_id = *id;
  }
  cfg.dimension = static_cast<int>(r.take_int("objective", "dimension", 0));
  cfg.noise_sd = r.take_real("objective", "noise_sd", 0.0);
  if (cfg.noise_sd < 0.0 || !std::isfinite(cfg.noise_sd)) {
    r.error("[objective] noise_sd must be finite and >= 0");
  }

  std::optional<Objective> objective;
  if (id && ObjectiveRegistry::global().contains(*id)) {
    try {
      objective = ObjectiveRegistry::global().make(*id, cfg.dimension,
                                                   cfg.noise_sd);
      cfg.dimension = objective->spec.dimension;
    } catch (const std::exception& e) {
      r.error(std::string("[objective] ") + e.what());
    }
  } else if (id) {
    r.error("[objective] unknown objective id '" + *id + "'");
  }

  // [run]
  RunConfig& run = cfg.run;
  run.lambda = static_cast<int>(r.take_int("run", "lambda", run.lambda));
  run.mu = static_cast<int>(r.take_int("run", "mu", run.mu));
  run.phi = r.take_real("run", "phi", run.phi);
  run.eta_m_init = r.take_real("run", "eta_m_init", run.eta_m_init);
  run.eta_v_init = r.take_real("run", "eta_v_init", run.eta_v_init);
  run.budget_evals = r.take_int("run", "budget_evals", 0);
  run.auto_phi = r.take_bool("run", "auto_phi", false);
  run.ncs_sigma_init = r.take_real("run", "ncs_sigma_init", 1.0);

  if (auto sense = r.take("run", "sense")) {
    if (*sense == "maximize") {
      run.sense = Sense::maximize;
    } else if (*sense == "minimize") {
      run.sense = Sense::minimize;
    } else {
      r.error("[run] sense must be maximize or minimize ('" + *sense + "')");
    }
  } else if (objective) {
    run.sense = objective->spec.sense;
  }

  if (auto rule = r.take("run", "update_rule")) {
    if (*rule == "natural") {
      run.update_rule = RunConfig::UpdateRule::natural;
    } else if (*rule == "plain") {
      run.update_rule = RunConfig::UpdateRule::plain;
    } else {
      r.error("[run] update_rule must be natural or plain ('" + *rule + "')");
    }
  }

  if (auto reevals = r.take("run", "reevals")) {
    const auto parts = split(*reevals, ':');
    bool ok = parts.size() <= 2;
    if (ok) {
      try {
        std::size_t pos = 0;
        run.reevals_min = std::stoi(trim(parts[0]), &pos);
        ok = pos == trim(parts[0]).size();
        if (ok && parts.size() == 2) {
          run.reevals_max = std::stoi(trim(parts[1]), &pos);
          ok = pos == trim(parts[1]).size();
        } else if (ok) {
          run.reevals_max = run.reevals_min;
        }
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (!ok) {
      r.error("[run] reevals must be N or MIN:MAX ('" + *reevals + "')");
    }
  }

  // Initialization box: explicit bounds, else the objective's domain box.
  std::optional<std::vector<double>> lower;
  std::optional<std::vector<double>> upper;
  if (auto v = r.take("run", "init_lower")) {
    lower = parse_real_list(*v);
    if (!lower) r.error("[run] init_lower: expected a number or comma list");
  }
  if (auto v = r.take("run", "init_upper")) {
    upper = parse_real_list(*v);
    if (!upper) r.error("[run] init_upper: expected a number or comma list");
  }
  if (lower.has_value() != upper.has_value()) {
    r.error("[run] init_lower and init_upper must be given together");
  } else if (lower && upper) {
    auto broadcast = [&](std::vector<double>& v) {
      if (v.size() == 1 && cfg.dimension > 1) {
        v.assign(static_cast<std::size_t>(cfg.dimension), v[0]);
      }
    };
    broadcast(*lower);
    broadcast(*upper);
    if (lower->size() != upper->size() ||
        (cfg.dimension > 0 &&
         lower->size() != static_cast<std::size_t>(cfg.dimension))) {
      r.error("[run] init bounds must match the objective dimension");
    } else {
      run.init_box.clear();
      for (std::size_t d = 0; d < lower->size(); ++d) {
        run.init_box.push_back({(*lower)[d], (*upper)[d]});
      }
    }
  } else if (objective) {
    run.init_box = objective->spec.domain_box;
  }

  // [exec]
  ExecPlan& plan = cfg.plan;
  if (auto mode = r.take("exec", "mode")) {
    if (*mode == "serial") {
      plan.mode = ExecMode::serial;
    } else if (*mode == "island") {
      plan.mode = ExecMode::island;
    } else if (*mode == "hybrid") {
      plan.mode = ExecMode::hybrid;
    } else {
      r.error("[exec] mode must be serial, island or hybrid ('" + *mode +
              "')");
    }
  }
  if (auto exchange = r.take("exec", "exchange")) {
    if (*exchange == "blocking") {
      plan.exchange = Exchange::blocking;
    } else if (*exchange == "nonblocking") {
      plan.exchange = Exchange::nonblocking;
    } else {
      r.error("[exec] exchange must be blocking or nonblocking ('" +
              *exchange + "')");
    }
  }
  const int default_workers =
      plan.mode == ExecMode::serial
          ? 1
          : (plan.mode == ExecMode::island ? run.lambda : run.lambda * run.mu);
  plan.workers =
      static_cast<int>(r.take_int("exec", "workers", default_workers));
  plan.slow_eval_ms = r.take_real("exec", "slow_eval_ms", 0.0);
  plan.straggler_index =
      static_cast<int>(r.take_int("exec", "straggler_index", -1));
  plan.straggler_factor = r.take_real("exec", "straggler_factor", 1.0);

  // [experiment]
  if (auto algo = r.take("experiment", "algo")) {
    if (*algo == "ncnes") {
      cfg.algo = Algo::ncnes;
    } else if (*algo == "ncs-c") {
      cfg.algo = Algo::ncs_c;
    } else {
      r.error("[experiment] algo must be ncnes or ncs-c ('" + *algo + "')");
    }
  }
  if (auto seeds = r.take("experiment", "seeds")) {
    cfg.seeds.clear();
    for (const std::string& part : split(*seeds, ',')) {
      try {
        std::size_t pos = 0;
        cfg.seeds.push_back(std::stoull(trim(part), &pos));
        if (pos != trim(part).size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        r.error("[experiment] seeds: not an integer ('" + trim(part) + "')");
      }
    }
  }
  if (cfg.seeds.empty()) r.error("[experiment] at least one seed is required");
  if (auto out = r.take("experiment", "out_dir")) cfg.out_dir = *out;
  cfg.quiet = r.take_bool("experiment", "quiet", false) || overrides.quiet;

  r.report_unknown({"objective", "run", "exec", "experiment"});

  // Cross-field invariants, collected rather than short-circuited.
  if (objective) {
    for (const std::string& e : validate(run, &objective->spec)) {
      errors.push_back("[run] " + e);
    }
  } else if (!run.init_box.empty()) {
    for (const std::string& e : validate(run)) errors.push_back("[run] " + e);
  }
  if (run.lambda >= 1) {
    for (const std::string& e : validate(plan, run)) {
      errors.push_back("[exec] " + e);
    }
  }
  if (cfg.algo == Algo::ncs_c && plan.mode != ExecMode::serial) {
    errors.push_back("[experiment] ncs-c runs serially; use mode = serial");
  }

  ParseResult result;
  result.errors = std::move(errors);
  if (result.errors.empty()) result.config = std::move(cfg);
  return result;
}

std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace

ParseResult parse_config_text(std::string_view text,
                              const ConfigOverrides& overrides) {
  std::vector<std::string> errors;
  RawConfig raw = parse_raw(text, errors);
  return resolve(std::move(raw), std::move(errors), overrides);
}

ParseResult parse_config(const std::string& path,
                         const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) {
    ParseResult result;
    result.errors.push_back("cannot open config file '" + path + "'");
    return result;
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), overrides);
}

std::string curve_to_csv(const RunReport& report, int lambda) {
  std::string out = "iteration,evals,best_fitness,mean_pairwise_db";
  for (int i = 1; i <= lambda; ++i) {
    out += ",process_mean_fitness_" + std::to_string(i);
  }
  out += "\n";
  for (const CurvePoint& p : report.curve) {
    out += std::to_string(p.iteration);
    out += ",";
    out += std::to_string(p.evals);
    out += ",";
    out += format_real(p.best_fitness);
    out += ",";
    out += format_real(p.mean_pairwise_db);
    for (double f : p.process_mean_fitness) {
      out += ",";
      out += format_real(f);
    }
    out += "\n";
  }
  return out;
}

void emit_curves(const RunReport& report, const std::string& path,
                 int lambda) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write curve file '" + path + "'");
  out << curve_to_csv(report, lambda);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<CurvePoint> read_curve_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) {
    throw std::runtime_error("curve CSV: missing header");
  }
  const auto columns = split(header, ',');
  if (columns.size() < 4 || columns[0] != "iteration" ||
      columns[1] != "evals" || columns[2] != "best_fitness" ||
      columns[3] != "mean_pairwise_db") {
    throw std::runtime_error("curve CSV: unexpected header '" + header + "'");
  }
  for (std::size_t i = 4; i < columns.size(); ++i) {
    if (columns[i] != "process_mean_fitness_" + std::to_string(i - 3)) {
      throw std::runtime_error("curve CSV: unexpected column '" + columns[i] +
                               "'");
    }
  }

  std::vector<CurvePoint> points;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != columns.size()) {
      throw std::runtime_error("curve CSV: wrong field count in '" + line +
                               "'");
    }
    CurvePoint p;
    p.iteration = std::stoll(fields[0]);
    p.evals = std::stoll(fields[1]);
    p.best_fitness = std::stod(fields[2]);
    p.mean_pairwise_db = std::stod(fields[3]);
    for (std::size_t i = 4; i < fields.size(); ++i) {
      p.process_mean_fitness.push_back(std::stod(fields[i]));
    }
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<CurvePoint> read_curve_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open curve file '" + path + "'");
  return read_curve_csv(in);
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string curve_filename(std::uint64_t seed) {
  return "curve_seed_" + std::to_string(seed) + ".csv";
}

int run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;

  Objective objective;
  try {
    objective = ObjectiveRegistry::global().make(cfg.objective_id,
                                                 cfg.dimension, cfg.noise_sd);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory '" << cfg.out_dir
              << "': " << ec.message() << "\n";
    return 1;
  }

  std::vector<double> iteration_counts;
  std::vector<double> eval_counts;
  std::vector<double> best_values;
  std::string summary = "seed,iterations,evals,best_fitness\n";

  for (std::uint64_t seed : cfg.seeds) {
    RunConfig run_cfg = cfg.run;
    run_cfg.seed = seed;

    RunReport report;
    try {
      if (cfg.algo == Algo::ncs_c) {
        report = run_ncs_c(run_cfg, objective);
      } else {
        report = execute(run_cfg, cfg.plan, objective).first;
      }
    } catch (const std::exception& e) {
      std::cerr << "error: seed " << seed << ": " << e.what() << "\n";
      return 1;
    }
    if (!report.valid) {
      std::cerr << "error: seed " << seed << ": " << report.error << "\n";
      return 1;
    }

    const fs::path curve_path = fs::path(cfg.out_dir) / curve_filename(seed);
    try {
      emit_curves(report, curve_path.string(), run_cfg.lambda);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }

    iteration_counts.push_back(static_cast<double>(report.iterations));
    eval_counts.push_back(static_cast<double>(report.evals_used));
    best_values.push_back(report.best_fitness);
    summary += std::to_string(seed) + "," + std::to_string(report.iterations) +
               "," + std::to_string(report.evals_used) + "," +
               format_real(report.best_fitness) + "\n";

    if (!cfg.quiet) {
      std::cout << "seed " << seed << ": best " << format_real(report.best_fitness)
                << " after " << report.evals_used << " evals, "
                << report.iterations << " iterations ("
                << format_real(report.wall_clock_s) << " s)\n";
    }
  }

  summary += "median," + format_real(median(iteration_counts)) + "," +
             format_real(median(eval_counts)) + "," +
             format_real(median(best_values)) + "\n";

  const fs::path summary_path = fs::path(cfg.out_dir) / kSummaryFilename;
  std::ofstream out(summary_path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write '" << summary_path.string() << "'\n";
    return 1;
  }
  out << summary;

  if (!cfg.quiet) {
    std::cout << "median best: " << format_real(median(best_values)) << " ("
              << cfg.seeds.size() << " seeds) -> " << cfg.out_dir << "\n";
  }
  return 0;
}

}  // namespace ncnes
