#include "hetpf/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hetpf {

namespace {

struct RawEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

using RawConfig = std::map<std::string, RawEntry>;

[[noreturn]] void fail(int line, const std::string& message) {
  throw std::invalid_argument("config line " + std::to_string(line) + ": " + message);
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

RawConfig tokenize(const std::string& text) {
  static const std::vector<std::string> kSections = {
      "model", "observation", "filter", "localization",
      "integration", "run", "init", "sweep", "converge"};
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail(line_no, "unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
        fail(line_no, "unknown section [" + section + "]");
      }
      raw["has." + section] = {"1", line_no, true};
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    if (section.empty()) fail(line_no, "key outside of any section");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    const std::string full = section + "." + key;
    if (raw.count(full) != 0u) fail(line_no, "duplicate key '" + full + "'");
    raw[full] = {value, line_no, false};
  }
  return raw;
}

class Reader {
 public:
  explicit Reader(RawConfig raw) : raw_(std::move(raw)) {}

  bool has_section(const std::string& section) const {
    return raw_.count("has." + section) != 0u;
  }

  bool has(const std::string& key) const { return raw_.count(key) != 0u; }

  std::string consume(const std::string& key, bool* found = nullptr) {
    auto it = raw_.find(key);
    if (it == raw_.end()) {
      if (found != nullptr) *found = false;
      return "";
    }
    it->second.used = true;
    if (found != nullptr) *found = true;
    return it->second.value;
  }

  double number(const std::string& key, double fallback) {
    bool found = false;
    const std::string v = consume(key, &found);
    if (!found) return fallback;
    return parse_double(key, v);
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    bool found = false;
    const std::string v = consume(key, &found);
    if (!found) return fallback;
    return parse_int(key, v);
  }

  std::string word(const std::string& key, const std::string& fallback) {
    bool found = false;
    const std::string v = consume(key, &found);
    return found ? v : fallback;
  }

  std::vector<double> number_list(const std::string& key) {
    bool found = false;
    const std::string v = consume(key, &found);
    std::vector<double> out;
    if (!found) return out;
    for (const std::string& item : split_list(v)) {
      out.push_back(parse_double(key, item));
    }
    return out;
  }

  std::vector<std::int64_t> integer_list(const std::string& key) {
    bool found = false;
    const std::string v = consume(key, &found);
    std::vector<std::int64_t> out;
    if (!found) return out;
    for (const std::string& item : split_list(v)) {
      out.push_back(parse_int(key, item));
    }
    return out;
  }

  int line_of(const std::string& key) const {
    const auto it = raw_.find(key);
    return it == raw_.end() ? 0 : it->second.line;
  }

  void reject_leftovers() const {
    for (const auto& [key, entry] : raw_) {
      if (!entry.used) fail(entry.line, "unknown key '" + key + "'");
    }
  }

 private:
  static std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> items;
    std::string current;
    std::istringstream in(v);
    while (std::getline(in, current, ',')) {
      const std::string t = trim(current);
      if (!t.empty()) items.push_back(t);
    }
    return items;
  }

  double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
      out = std::stod(v, &pos);
    } catch (const std::exception&) {
      fail(line_of(key), "expected a number for '" + key + "', got '" + v + "'");
    }
    if (pos != v.size()) {
      fail(line_of(key), "trailing junk after number in '" + key + "'");
    }
    return out;
  }

  std::int64_t parse_int(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    std::int64_t out = 0;
    try {
      out = std::stoll(v, &pos);
    } catch (const std::exception&) {
      fail(line_of(key), "expected an integer for '" + key + "', got '" + v + "'");
    }
    if (pos != v.size()) {
      fail(line_of(key), "trailing junk after integer in '" + key + "'");
    }
    return out;
  }

  RawConfig raw_;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != 0) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

}  // namespace

std::string model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLorenz63: return "lorenz63";
    case ModelKind::kLorenz96: return "lorenz96";
    case ModelKind::kCoupled: return "coupled";
  }
  return "?";
}

Index ExperimentConfig::sites() const {
  switch (model) {
    case ModelKind::kLorenz63: return 3;
    case ModelKind::kLorenz96: return l96.sites;
    case ModelKind::kCoupled: return coupled.sites;
  }
  return 0;
}

Index ExperimentConfig::state_dim() const {
  switch (model) {
    case ModelKind::kLorenz63: return 3;
    case ModelKind::kLorenz96: return l96.sites;
    case ModelKind::kCoupled: return 3 * coupled.sites;
  }
  return 0;
}

std::vector<Index> ExperimentConfig::observed_sites() const {
  std::vector<Index> out;
  for (Index s = 0; s < sites(); s += obs_every) out.push_back(s);
  return out;
}

Index ExperimentConfig::inner_steps() const {
  const double ratio = dt_obs / dt;
  const auto steps = static_cast<Index>(std::llround(ratio));
  if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * ratio) {
    throw std::invalid_argument(
        "config: observation interval must be an integer multiple of dt");
  }
  return steps;
}

HybridConfig ExperimentConfig::hybrid(bool force_pure_kalman) const {
  HybridConfig h;
  if (force_pure_kalman) {
    h.mode = BridgingMode::fixed(0.0);
  } else if (adaptive) {
    h.mode = BridgingMode::adaptive(theta);
  } else {
    h.mode = BridgingMode::fixed(alpha);
  }
  h.ordering = ordering;
  h.rejuvenation_beta = rejuvenation;
  return h;
}

void ExperimentConfig::validate() const {
  switch (model) {
    case ModelKind::kLorenz63: l63.validate(); break;
    case ModelKind::kLorenz96: l96.validate(); break;
    case ModelKind::kCoupled: coupled.validate(); break;
  }
  if (!(dt > 0.0)) throw std::invalid_argument("config: dt must be positive");
  inner_steps();
  if (obs_every < 1 || obs_every > sites()) {
    throw std::invalid_argument("config: observation stride out of range");
  }
  if (obs_variance < 0.0) {
    throw std::invalid_argument("config: observation variance must be >= 0");
  }
  if (ensemble_size < 2) {
    throw std::invalid_argument("config: need at least 2 ensemble members");
  }
  if (cycles < 1) throw std::invalid_argument("config: cycles must be >= 1");
  if (spin_up < 0 || spin_up >= cycles) {
    throw std::invalid_argument("config: spin_up must lie in [0, cycles)");
  }
  if (!(init_spread > 0.0)) {
    throw std::invalid_argument("config: initial spread must be positive");
  }
  if (localized && model == ModelKind::kLorenz63) {
    throw std::invalid_argument("config: localization needs a spatial grid model");
  }
  if (localized && !(radius > 0.0)) {
    throw std::invalid_argument("config: localization radius must be positive");
  }
  hybrid().validate();  // checks alpha/theta/rejuvenation ranges
  if (converge.repeats < 1 || converge.ensemble_sizes.empty() ||
      converge.alphas.empty()) {
    throw std::invalid_argument("config: converge section incomplete");
  }
  if (!(converge.prior_sigma > 0.0) || !(converge.obs_variance > 0.0)) {
    throw std::invalid_argument("config: converge prior/observation scales must be positive");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  Reader r(tokenize(text));
  ExperimentConfig cfg;

  const std::string kind = r.word("model.kind", "lorenz63");
  if (kind == "lorenz63") {
    cfg.model = ModelKind::kLorenz63;
    cfg.dt = 0.01;
    cfg.dt_obs = 0.12;
    cfg.obs_every = 3;  // first component only
    cfg.init_spread = 1.0;
  } else if (kind == "lorenz96") {
    cfg.model = ModelKind::kLorenz96;
    cfg.dt = 0.005;
    cfg.dt_obs = 0.11;
    cfg.obs_every = 2;
    cfg.init_spread = 0.1;
  } else if (kind == "coupled") {
    cfg.model = ModelKind::kCoupled;
    cfg.dt = 0.002;
    cfg.dt_obs = 0.15;
    cfg.obs_every = 2;
    cfg.init_spread = 0.1;
  } else {
    fail(r.line_of("model.kind"), "unknown model kind '" + kind + "'");
  }

  switch (cfg.model) {
    case ModelKind::kLorenz63:
      cfg.l63.sigma = r.number("model.sigma", cfg.l63.sigma);
      cfg.l63.rho = r.number("model.rho", cfg.l63.rho);
      cfg.l63.beta = r.number("model.beta", cfg.l63.beta);
      break;
    case ModelKind::kLorenz96:
      cfg.l96.sites = r.integer("model.sites", cfg.l96.sites);
      cfg.l96.forcing = r.number("model.forcing", cfg.l96.forcing);
      break;
    case ModelKind::kCoupled:
      cfg.coupled.sites = r.integer("model.sites", cfg.coupled.sites);
      cfg.coupled.delta = r.number("model.delta", cfg.coupled.delta);
      cfg.coupled.epsilon = r.number("model.epsilon", cfg.coupled.epsilon);
      cfg.coupled.gamma = r.number("model.gamma", cfg.coupled.gamma);
      cfg.coupled.wave_speed = r.number("model.wave_speed", cfg.coupled.wave_speed);
      break;
  }

  cfg.dt_obs = r.number("observation.interval", cfg.dt_obs);
  cfg.obs_every = r.integer("observation.every", cfg.obs_every);
  cfg.obs_variance = r.number("observation.variance", cfg.obs_variance);

  cfg.ensemble_size = r.integer("filter.ensemble_size", cfg.ensemble_size);
  const std::string ordering = r.word("filter.ordering", "etpf-esrf");
  if (ordering == "etpf-esrf") {
    cfg.ordering = Ordering::kEtpfFirst;
  } else if (ordering == "esrf-etpf") {
    cfg.ordering = Ordering::kEsrfFirst;
  } else {
    fail(r.line_of("filter.ordering"), "ordering must be etpf-esrf or esrf-etpf");
  }
  const std::string bridging = r.word("filter.bridging", "fixed");
  if (bridging == "fixed") {
    cfg.adaptive = false;
  } else if (bridging == "adaptive") {
    cfg.adaptive = true;
  } else {
    fail(r.line_of("filter.bridging"), "bridging must be fixed or adaptive");
  }
  cfg.alpha = r.number("filter.alpha", cfg.alpha);
  cfg.theta = r.number("filter.theta", cfg.theta);
  cfg.rejuvenation = r.number("filter.rejuvenation", cfg.rejuvenation);

  cfg.localized = r.has_section("localization");
  cfg.radius = r.number("localization.radius", cfg.radius);

  cfg.dt = r.number("integration.dt", cfg.dt);

  cfg.cycles = r.integer("run.cycles", cfg.cycles);
  cfg.spin_up = r.integer("run.spin_up", cfg.spin_up);
  cfg.seed = static_cast<std::uint64_t>(r.integer("run.seed", 1));

  cfg.init_spread = r.number("init.spread", cfg.init_spread);

  cfg.sweep.alphas = r.number_list("sweep.alphas");
  cfg.sweep.thetas = r.number_list("sweep.thetas");
  for (const auto v : r.integer_list("sweep.ensemble_sizes")) {
    cfg.sweep.ensemble_sizes.push_back(static_cast<Index>(v));
  }
  for (const auto v : r.integer_list("sweep.seeds")) {
    cfg.sweep.seeds.push_back(static_cast<std::uint64_t>(v));
  }

  cfg.converge.repeats = r.integer("converge.repeats", cfg.converge.repeats);
  if (r.has("converge.ensemble_sizes")) {
    cfg.converge.ensemble_sizes.clear();
    for (const auto v : r.integer_list("converge.ensemble_sizes")) {
      cfg.converge.ensemble_sizes.push_back(static_cast<Index>(v));
    }
  }
  if (r.has("converge.alphas")) {
    cfg.converge.alphas = r.number_list("converge.alphas");
  }
  cfg.converge.prior_mean_low =
      r.number("converge.prior_mean_low", cfg.converge.prior_mean_low);
  cfg.converge.prior_mean_high =
      r.number("converge.prior_mean_high", cfg.converge.prior_mean_high);
  cfg.converge.prior_sigma = r.number("converge.prior_sigma", cfg.converge.prior_sigma);
  cfg.converge.obs_variance = r.number("converge.obs_variance", cfg.converge.obs_variance);
  cfg.converge.y_obs = r.number("converge.y_obs", cfg.converge.y_obs);

  r.reject_leftovers();
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("config: cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string format_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[model]\n";
  out << "kind = " << model_name(cfg.model) << "\n";
  switch (cfg.model) {
    case ModelKind::kLorenz63:
      out << "sigma = " << fmt(cfg.l63.sigma) << "\n";
      out << "rho = " << fmt(cfg.l63.rho) << "\n";
      out << "beta = " << fmt(cfg.l63.beta) << "\n";
      break;
    case ModelKind::kLorenz96:
      out << "sites = " << cfg.l96.sites << "\n";
      out << "forcing = " << fmt(cfg.l96.forcing) << "\n";
      break;
    case ModelKind::kCoupled:
      out << "sites = " << cfg.coupled.sites << "\n";
      out << "delta = " << fmt(cfg.coupled.delta) << "\n";
      out << "epsilon = " << fmt(cfg.coupled.epsilon) << "\n";
      out << "gamma = " << fmt(cfg.coupled.gamma) << "\n";
      out << "wave_speed = " << fmt(cfg.coupled.wave_speed) << "\n";
      break;
  }
  out << "\n[observation]\n";
  out << "interval = " << fmt(cfg.dt_obs) << "\n";
  out << "every = " << cfg.obs_every << "\n";
  out << "variance = " << fmt(cfg.obs_variance) << "\n";
  out << "\n[filter]\n";
  out << "ensemble_size = " << cfg.ensemble_size << "\n";
  out << "ordering = "
      << (cfg.ordering == Ordering::kEtpfFirst ? "etpf-esrf" : "esrf-etpf") << "\n";
  out << "bridging = " << (cfg.adaptive ? "adaptive" : "fixed") << "\n";
  out << "alpha = " << fmt(cfg.alpha) << "\n";
  out << "theta = " << fmt(cfg.theta) << "\n";
  out << "rejuvenation = " << fmt(cfg.rejuvenation) << "\n";
  if (cfg.localized) {
    out << "\n[localization]\n";
    out << "radius = " << fmt(cfg.radius) << "\n";
  }
  out << "\n[integration]\n";
  out << "dt = " << fmt(cfg.dt) << "\n";
  out << "\n[run]\n";
  out << "cycles = " << cfg.cycles << "\n";
  out << "spin_up = " << cfg.spin_up << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "\n[init]\n";
  out << "spread = " << fmt(cfg.init_spread) << "\n";
  if (!cfg.sweep.empty()) {
    out << "\n[sweep]\n";
    if (!cfg.sweep.alphas.empty()) out << "alphas = " << join(cfg.sweep.alphas) << "\n";
    if (!cfg.sweep.thetas.empty()) out << "thetas = " << join(cfg.sweep.thetas) << "\n";
    if (!cfg.sweep.ensemble_sizes.empty()) {
      out << "ensemble_sizes = " << join(cfg.sweep.ensemble_sizes) << "\n";
    }
    if (!cfg.sweep.seeds.empty()) out << "seeds = " << join(cfg.sweep.seeds) << "\n";
  }
  out << "\n[converge]\n";
  out << "repeats = " << cfg.converge.repeats << "\n";
  out << "ensemble_sizes = " << join(cfg.converge.ensemble_sizes) << "\n";
  out << "alphas = " << join(cfg.converge.alphas) << "\n";
  out << "prior_mean_low = " << fmt(cfg.converge.prior_mean_low) << "\n";
  out << "prior_mean_high = " << fmt(cfg.converge.prior_mean_high) << "\n";
  out << "prior_sigma = " << fmt(cfg.converge.prior_sigma) << "\n";
  out << "obs_variance = " << fmt(cfg.converge.obs_variance) << "\n";
  out << "y_obs = " << fmt(cfg.converge.y_obs) << "\n";
  return out.str();
}

}  // namespace hetpf
