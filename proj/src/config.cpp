#include "muskat/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace muskat {

using nlohmann::json;

ConfigError::ConfigError(std::string where, const std::string& what)
    : std::runtime_error("config error at " + where + ": " + what), location(std::move(where)) {}

namespace {

// Walks one JSON object, remembering its pointer for diagnostics and
// rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(here(), "expected an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = find(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_number()) throw ConfigError(at(key), "expected a number");
    return v->get<double>();
  }

  long integer(const std::string& key, std::optional<long> fallback = std::nullopt) {
    const json* v = find(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
    return v->get<long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key, true);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = find(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_string()) throw ConfigError(at(key), "expected a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json* v = find(key, true);
    if (!v) return {};
    if (!v->is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) throw ConfigError(at(key) + "/" + std::to_string(i), "expected a number");
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) {
    const json* v = find(key, true);
    if (!v) return {};
    if (!v->is_array()) throw ConfigError(at(key), "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_string()) throw ConfigError(at(key) + "/" + std::to_string(i), "expected a string");
      out.push_back((*v)[i].get<std::string>());
    }
    return out;
  }

  Section child(const std::string& key) {
    used_.insert(key);
    if (!node_.contains(key)) throw ConfigError(at(key), "missing section");
    return Section(node_.at(key), at(key));
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return node_.at(key);
  }

  // Converts module validation failures into located errors.
  template <class Fn>
  void guard(const std::string& key, Fn&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(key.empty() ? here() : at(key), e.what());
    }
  }

  void finish() const {
    for (const auto& [key, value] : node_.items())
      if (!used_.count(key)) throw ConfigError(at(key), "unknown field");
  }

  std::string here() const { return path_.empty() ? "/" : path_; }
  std::string at(const std::string& key) const { return path_ + "/" + key; }

 private:
  const json* find(const std::string& key, bool optional) {
    used_.insert(key);
    if (!node_.contains(key)) {
      if (optional) return nullptr;
      throw ConfigError(at(key), "missing required field");
    }
    return &node_.at(key);
  }

  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

InitialDataSpec parse_initial(Section s, std::uint64_t default_seed) {
  InitialDataSpec spec;
  const std::string kind = s.text("kind");
  if (kind == "cosine") {
    CosineData d;
    d.amplitude = s.number("amplitude");
    const auto k = s.numbers("wavevector");
    if (!k.empty()) {
      if (k.size() != 2) throw ConfigError(s.at("wavevector"), "expected two components");
      d.wavevector = {k[0], k[1]};
    }
    spec.kind = d;
  } else if (kind == "bump") {
    spec.kind = BumpData{s.number("amplitude"), s.number("width")};
  } else if (kind == "ridge") {
    spec.kind = RidgeData{s.number("slope"), s.number("plateau", 1.0)};
  } else if (kind == "rough") {
    RoughData d;
    d.seed = static_cast<std::uint64_t>(s.integer("seed", static_cast<long>(default_seed)));
    d.wavenumbers = s.numbers("wavenumbers");
    d.amplitudes = s.numbers("amplitudes");
    if (d.wavenumbers.empty()) throw ConfigError(s.at("wavenumbers"), "rough data needs wavenumbers");
    if (d.wavenumbers.size() != d.amplitudes.size())
      throw ConfigError(s.at("amplitudes"), "one amplitude per wavenumber expected");
    spec.kind = d;
  } else {
    throw ConfigError(s.at("kind"), "unknown kind '" + kind + "' (cosine, bump, ridge, rough)");
  }
  spec.target_slope = s.number("target_slope", spec.target_slope);
  spec.cutoff_M = s.number("cutoff_M", spec.cutoff_M);
  spec.mollifier_width = s.number("mollifier_width", spec.mollifier_width);
  if (!(spec.target_slope > 0.0 && spec.target_slope < kSlopeThreshold))
    throw ConfigError(s.at("target_slope"), "must lie in (0, 5^{-1/2})");
  if (!(spec.cutoff_M > 0.0)) throw ConfigError(s.at("cutoff_M"), "must be positive");
  if (!(spec.mollifier_width >= 0.0)) throw ConfigError(s.at("mollifier_width"), "must be >= 0");
  s.finish();
  return spec;
}

GrowthEnvelope parse_growth(Section s) {
  std::optional<GrowthEnvelope> out;
  if (s.has("table")) {
    const json& t = s.raw("table");
    if (!t.is_array()) throw ConfigError(s.at("table"), "expected [[R, Omega], ...]");
    std::vector<std::pair<double, double>> samples;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!t[i].is_array() || t[i].size() != 2 || !t[i][0].is_number() || !t[i][1].is_number())
        throw ConfigError(s.at("table") + "/" + std::to_string(i), "expected [R, Omega]");
      samples.emplace_back(t[i][0].get<double>(), t[i][1].get<double>());
    }
    const double tail = s.number("alpha_tail", 0.0);
    s.guard("table", [&] { out = GrowthEnvelope::table(std::move(samples), tail); });
  } else {
    const double omega0 = s.number("omega0");
    const double alpha = s.number("alpha", 0.0);
    s.guard("", [&] { out = GrowthEnvelope::power_law(omega0, alpha); });
  }
  s.finish();
  return *out;
}

}  // namespace

double RunConfig::support_radius() const {
  if (grid.policy == BoundaryPolicy::periodic) return 0.0;
  return initial.cutoff_M + initial.mollifier_width;
}

void RunConfig::validate() const {
  auto located = [](const std::string& where, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(where, e.what());
    }
  };
  located("/grid", [&] { grid.validate(); });
  located("/quadrature", [&] { quadrature.validate(grid, support_radius()); });
  located("/stepper", [&] { stepper.validate(); });
  if (!(epsilon >= 0.0)) throw ConfigError("/epsilon", "must be >= 0");
  for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
    if (!(eps_ladder[i] >= 0.0)) throw ConfigError("/eps_ladder/" + std::to_string(i), "must be >= 0");
    if (i > 0 && !(eps_ladder[i] < eps_ladder[i - 1]))
      throw ConfigError("/eps_ladder/" + std::to_string(i), "ladder must strictly decrease");
  }
  const double max_radius = grid.extent;
  for (std::size_t i = 0; i < stepper.envelope_radii.size(); ++i)
    if (!(stepper.envelope_radii[i] > 0.0 && stepper.envelope_radii[i] <= max_radius))
      throw ConfigError("/stepper/envelope_radii/" + std::to_string(i), "radius must lie in (0, extent]");
}

RunConfig parse_config(const json& doc) {
  Section root(doc, "");
  RunConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(root.integer("seed", 0));

  {
    Section g = root.child("grid");
    cfg.grid.nodes = static_cast<int>(g.integer("nodes"));
    cfg.grid.extent = g.number("extent");
    g.guard("policy", [&] { cfg.grid.policy = parse_boundary_policy(g.text("policy", "compact-support")); });
    g.finish();
  }
  cfg.initial = parse_initial(root.child("initial"), cfg.seed);
  {
    Section q = root.child("quadrature");
    cfg.quadrature.R_max = q.number("R_max");
    q.guard("near_cell", [&] { cfg.quadrature.near_cell = parse_near_cell_policy(q.text("near_cell", "quadratic-model")); });
    q.guard("tail", [&] { cfg.quadrature.tail = parse_tail_correction(q.text("tail", "analytic")); });
    q.guard("method", [&] { cfg.quadrature.method = parse_quadrature_method(q.text("method", "direct")); });
    cfg.quadrature.split_radius = q.number("split_radius", 0.0);
    q.finish();
  }
  {
    Section s = root.child("stepper");
    StepperConfig& st = cfg.stepper;
    s.guard("scheme", [&] { st.scheme = parse_scheme(s.text("scheme", "RK2")); });
    st.cfl_hyperbolic = s.number("cfl_hyperbolic", st.cfl_hyperbolic);
    st.cfl_viscous = s.number("cfl_viscous", st.cfl_viscous);
    st.t_end = s.number("t_end");
    st.snapshot_cadence = s.number("snapshot_cadence", st.snapshot_cadence);
    st.snapshot_times = s.numbers("snapshot_times");
    st.envelope_radii = s.numbers("envelope_radii");
    st.estimate_time_error = s.boolean("estimate_time_error", st.estimate_time_error);
    st.fixed_dt = s.number("fixed_dt", 0.0);
    s.finish();
  }
  cfg.epsilon = root.number("epsilon", 0.0);
  cfg.eps_ladder = root.numbers("eps_ladder");
  if (root.has("checks")) {
    Section c = root.child("checks");
    CheckBudgets& b = cfg.checks;
    b.names = c.strings("names");
    b.curvature_budget = c.number("curvature_budget", 0.0);
    b.time_regularity_budget = c.number("time_regularity_budget", 0.0);
    b.slope_decay_band = c.number("slope_decay_band", b.slope_decay_band);
    if (c.has("growth")) b.growth = parse_growth(c.child("growth"));
    if (c.has("modulus")) {
      Section m = c.child("modulus");
      b.modulus_A = m.number("A", 1.0);
      b.modulus_c = m.number("c", 1.0);
      if (m.has("lambda")) b.modulus_lambda = m.number("lambda");
      if (!(b.modulus_A > 0.0)) throw ConfigError(m.at("A"), "must be positive");
      if (!(b.modulus_c > 0.0)) throw ConfigError(m.at("c"), "must be positive");
      m.finish();
    }
    if (c.has("pairs")) {
      Section p = c.child("pairs");
      b.pairs.near_radius_nodes = static_cast<int>(p.integer("near_radius_nodes", b.pairs.near_radius_nodes));
      b.pairs.far_pairs = static_cast<int>(p.integer("far_pairs", b.pairs.far_pairs));
      b.pairs.exhaustive = p.boolean("exhaustive", false);
      b.pairs.seed = static_cast<std::uint64_t>(p.integer("seed", static_cast<long>(cfg.seed)));
      p.finish();
    } else {
      b.pairs.seed = cfg.seed;
    }
    c.finish();
  }
  cfg.output = root.text("output", "");
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n');
    const auto last_newline = text.rfind('\n', byte == 0 ? 0 : byte - 1);
    const auto column = last_newline == std::string::npos || byte == 0 ? byte + 1 : byte - last_newline;
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column), "syntax error");
  }
  return parse_config(doc);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

namespace {

json initial_json(const InitialDataSpec& s) {
  json j;
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, CosineData>) {
          j = {{"kind", "cosine"}, {"amplitude", d.amplitude}, {"wavevector", {d.wavevector[0], d.wavevector[1]}}};
        } else if constexpr (std::is_same_v<T, BumpData>) {
          j = {{"kind", "bump"}, {"amplitude", d.amplitude}, {"width", d.width}};
        } else if constexpr (std::is_same_v<T, RidgeData>) {
          j = {{"kind", "ridge"}, {"slope", d.slope}, {"plateau", d.plateau}};
        } else {
          j = {{"kind", "rough"}, {"seed", d.seed}, {"wavenumbers", d.wavenumbers}, {"amplitudes", d.amplitudes}};
        }
      },
      s.kind);
  j["target_slope"] = s.target_slope;
  j["cutoff_M"] = s.cutoff_M;
  j["mollifier_width"] = s.mollifier_width;
  return j;
}

}  // namespace

json to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["grid"] = {{"nodes", cfg.grid.nodes}, {"extent", cfg.grid.extent}, {"policy", to_string(cfg.grid.policy)}};
  j["initial"] = initial_json(cfg.initial);
  j["quadrature"] = {{"R_max", cfg.quadrature.R_max},
                     {"near_cell", to_string(cfg.quadrature.near_cell)},
                     {"tail", to_string(cfg.quadrature.tail)},
                     {"method", to_string(cfg.quadrature.method)},
                     {"split_radius", cfg.quadrature.split_radius}};
  const StepperConfig& s = cfg.stepper;
  j["stepper"] = {{"scheme", to_string(s.scheme)},     {"cfl_hyperbolic", s.cfl_hyperbolic},
                  {"cfl_viscous", s.cfl_viscous},      {"t_end", s.t_end},
                  {"snapshot_cadence", s.snapshot_cadence}, {"snapshot_times", s.snapshot_times},
                  {"envelope_radii", s.envelope_radii}, {"estimate_time_error", s.estimate_time_error},
                  {"fixed_dt", s.fixed_dt}};
  j["epsilon"] = cfg.epsilon;
  j["eps_ladder"] = cfg.eps_ladder;
  const CheckBudgets& b = cfg.checks;
  json checks = {{"names", b.names},
                 {"curvature_budget", b.curvature_budget},
                 {"time_regularity_budget", b.time_regularity_budget},
                 {"slope_decay_band", b.slope_decay_band},
                 {"modulus", {{"A", b.modulus_A}, {"c", b.modulus_c}}},
                 {"pairs",
                  {{"near_radius_nodes", b.pairs.near_radius_nodes},
                   {"far_pairs", b.pairs.far_pairs},
                   {"exhaustive", b.pairs.exhaustive},
                   {"seed", b.pairs.seed}}}};
  if (b.modulus_lambda) checks["modulus"]["lambda"] = *b.modulus_lambda;
  if (b.growth) {
    if (const auto* p = std::get_if<GrowthEnvelope::PowerLaw>(&b.growth->data())) {
      checks["growth"] = {{"omega0", p->omega0}, {"alpha", p->alpha}};
    } else {
      const auto& t = std::get<GrowthEnvelope::Table>(b.growth->data());
      json rows = json::array();
      for (const auto& [R, O] : t.samples) rows.push_back({R, O});
      checks["growth"] = {{"table", rows}, {"alpha_tail", t.alpha_tail}};
    }
  }
  j["checks"] = checks;
  j["output"] = cfg.output.string();
  return j;
}

}  // namespace muskat
