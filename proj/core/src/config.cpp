#include "hmmilm/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "hmmilm/error.hpp"

namespace hmmilm {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: '" + text + "'");
  }
}

long long to_int(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an integer: '" + text + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an unsigned integer: '" + text + "'");
  }
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": not a boolean: '" + text + "'");
}

ParamId to_param(const std::string& key, const std::string& name) {
  const auto id = param_from_name(name);
  if (!id) throw ConfigError(key + ": unknown parameter '" + name + "'");
  return *id;
}

std::array<double, 3> to_triple(const std::string& key, const std::string& text) {
  const auto parts = split_on(text, ',');
  if (parts.size() != 3) throw ConfigError(key + ": expected three probabilities");
  return {to_double(key, parts[0]), to_double(key, parts[1]), to_double(key, parts[2])};
}

/// Applies one key of a [model] or [variant.*] section. Returns false for unknown keys.
bool apply_model_key(ModelSection& m, const std::string& section, const std::string& key, const std::string& value) {
  const std::string where = section + "." + key;
  if (key == "kernel") {
    const auto k = kernel_from_name(value);
    if (!k) throw ConfigError(where + ": unknown kernel '" + value + "'");
    m.kernel.kind = *k;
  } else if (key == "observation") {
    const auto o = observation_from_name(value);
    if (!o) throw ConfigError(where + ": unknown observation model '" + value + "'");
    m.observation = *o;
  } else if (key == "initial") {
    m.initial = to_triple(where, value);
  } else if (key.rfind("initial.", 0) == 0) {
    const long long id = to_int(where, key.substr(8));
    m.initial_overrides.emplace_back(static_cast<int>(id), to_triple(where, value));
  } else if (key == "anchor") {
    m.kernel.anchor = to_double(where, value);
  } else if (key == "dmax") {
    m.kernel.dmax = to_double(where, value);
  } else if (key == "dmin") {
    m.kernel.dmin = to_double(where, value);
  } else if (key == "ward") {
    if (value != "data" && value != "open") throw ConfigError(where + ": expected data or open");
    m.use_ward_closure = value == "data";
  } else if (key == "no_undetected_infections") {
    m.constraints.no_undetected_infections = to_bool(where, value);
  } else if (key == "pinned") {
    m.constraints.pinned.clear();
    for (const auto& s : split_on(value, ','))
      if (!s.empty()) m.constraints.pinned.push_back(static_cast<int>(to_int(where, s)));
  } else if (key == "order") {
    m.order = static_cast<int>(to_int(where, value));
  } else if (key.rfind("prior.", 0) == 0) {
    m.priors[static_cast<int>(to_param(where, key.substr(6)))] = parse_prior(value);
  } else if (key.rfind("fixed.", 0) == 0) {
    m.fixed[static_cast<int>(to_param(where, key.substr(6)))] = to_double(where, value);
  } else {
    return false;
  }
  return true;
}

std::vector<ParamBlock> parse_blocks(const std::string& where, const std::string& text) {
  std::vector<ParamBlock> blocks;
  for (const auto& spec : split_on(text, ';')) {
    if (spec.empty()) continue;
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw ConfigError(where + ": block '" + spec + "' lacks kind:params");
    const auto kind = sampler_from_name(trim(spec.substr(0, colon)));
    if (!kind) throw ConfigError(where + ": unknown sampler '" + spec.substr(0, colon) + "'");
    ParamBlock b;
    b.kind = *kind;
    for (const auto& p : split_on(spec.substr(colon + 1), ',')) b.params.push_back(to_param(where, p));
    blocks.push_back(std::move(b));
  }
  return blocks;
}

void unknown_key(const std::string& section, const std::string& key) {
  throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
}

}  // namespace

GridSpec parse_grid(const std::string& text) {
  const auto parts = split_on(text, ':');
  if (parts.size() != 2 && parts.size() != 4) throw ConfigError("grid must be rows:cols[:row_spacing:within_row_spacing]");
  GridSpec g;
  g.rows = static_cast<int>(to_int("grid", parts[0]));
  g.cols = static_cast<int>(to_int("grid", parts[1]));
  if (parts.size() == 4) {
    g.row_spacing = to_double("grid", parts[2]);
    g.within_row_spacing = to_double("grid", parts[3]);
  }
  if (g.rows < 1 || g.cols < 1) throw ConfigError("grid dimensions must be positive");
  if (!(g.row_spacing > 0.0) || !(g.within_row_spacing > 0.0)) throw ConfigError("grid spacings must be positive");
  return g;
}

Prior parse_prior(const std::string& text) {
  std::istringstream in(text);
  std::string kind;
  in >> kind;
  std::vector<double> args;
  std::string tok;
  while (in >> tok) args.push_back(to_double("prior", tok));
  auto need = [&](std::size_t n) {
    if (args.size() != n) throw ConfigError("prior '" + text + "' needs " + std::to_string(n) + " numbers");
  };
  if (kind == "uniform") {
    need(2);
    if (!(args[0] < args[1])) throw ConfigError("uniform prior needs lower < upper");
    return Prior::uniform(args[0], args[1]);
  }
  if (kind == "beta") {
    need(2);
    if (!(args[0] > 0 && args[1] > 0)) throw ConfigError("beta prior needs positive shapes");
    return Prior::beta_dist(args[0], args[1]);
  }
  if (kind == "shifted_gamma") {
    need(3);
    if (!(args[0] > 0 && args[1] > 0)) throw ConfigError("gamma prior needs positive shape and rate");
    return Prior::shifted_gamma(args[0], args[1], args[2]);
  }
  if (kind == "inverse_uniform") {
    need(0);
    return Prior::inverse_uniform();
  }
  if (kind == "normal") {
    need(2);
    if (!(args[1] > 0)) throw ConfigError("normal prior needs a positive sd");
    return Prior::normal(args[0], args[1]);
  }
  throw ConfigError("unknown prior '" + kind + "'");
}

std::vector<double> parse_distance_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    const auto parts = split_on(text, ':');
    if (parts.size() != 3) throw ConfigError("distance grid must be from:to:step");
    const double from = to_double("distances", parts[0]);
    const double to = to_double("distances", parts[1]);
    const double step = to_double("distances", parts[2]);
    if (!(step > 0.0) || !(to >= from)) throw ConfigError("distance grid needs step > 0 and to >= from");
    const auto n = static_cast<long long>(std::floor((to - from) / step + 1e-9));
    for (long long k = 0; k <= n; ++k) out.push_back(from + static_cast<double>(k) * step);
    return out;
  }
  for (const auto& s : split_on(text, ','))
    if (!s.empty()) out.push_back(to_double("distances", s));
  if (out.empty()) throw ConfigError("empty distance grid");
  return out;
}

RunConfig parse_config(std::istream& in) {
  const std::string text{std::istreambuf_iterator<char>(in), {}};
  // read_ini drops sections without keys, so variant headers are collected from the raw text.
  std::vector<std::string> variant_sections;
  {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      line = trim(line);
      if (line.size() > 2 && line.front() == '[' && line.back() == ']') {
        const std::string name = trim(line.substr(1, line.size() - 2));
        if (name.rfind("variant.", 0) == 0 &&
            std::find(variant_sections.begin(), variant_sections.end(), name) == variant_sections.end())
          variant_sections.push_back(name);
      }
    }
  }
  pt::ptree tree;
  try {
    std::istringstream body(text);
    pt::read_ini(body, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
    for (const auto& [key, node] : body) {
      const std::string value = trim(node.data());
      const std::string where = section + "." + key;
      if (section == "population") {
        if (key == "grid") {
          cfg.grid = parse_grid(value);
        } else if (key == "neighborhood") {
          if (value == "queen")
            cfg.neighborhood.kind = NeighborhoodRule::Kind::Queen;
          else if (value == "complete")
            cfg.neighborhood.kind = NeighborhoodRule::Kind::Complete;
          else if (value == "radius")
            cfg.neighborhood.kind = NeighborhoodRule::Kind::Radius;
          else
            throw ConfigError(where + ": expected queen, complete or radius");
        } else if (key == "order") {
          cfg.neighborhood.order = static_cast<int>(to_int(where, value));
        } else if (key == "radius") {
          cfg.neighborhood.radius = to_double(where, value);
        } else if (key == "individuals") {
          cfg.individuals = static_cast<int>(to_int(where, value));
        } else {
          unknown_key(section, key);
        }
      } else if (section == "model") {
        if (key == "horizon")
          cfg.horizon = static_cast<int>(to_int(where, value));
        else if (!apply_model_key(cfg.model, section, key, value))
          unknown_key(section, key);
      } else if (section == "priors") {
        cfg.model.priors[static_cast<int>(to_param(where, key))] = parse_prior(value);
      } else if (section == "fixed") {
        cfg.model.fixed[static_cast<int>(to_param(where, key))] = to_double(where, value);
      } else if (section == "truth") {
        cfg.truth.set(to_param(where, key), to_double(where, value));
      } else if (section == "mcmc") {
        auto& m = cfg.mcmc;
        if (key == "iterations")
          m.iterations = static_cast<int>(to_int(where, value));
        else if (key == "burnin")
          m.burn_in = static_cast<int>(to_int(where, value));
        else if (key == "chains")
          m.chains = static_cast<int>(to_int(where, value));
        else if (key == "seed")
          m.seed = to_u64(where, value);
        else if (key == "thin")
          m.thin = static_cast<int>(to_int(where, value));
        else if (key == "threads")
          m.threads = static_cast<int>(to_int(where, value));
        else if (key == "afss_interval")
          m.afss_interval = static_cast<int>(to_int(where, value));
        else if (key == "rw_target")
          m.rw_target = to_double(where, value);
        else if (key == "full_vector_afss")
          m.full_vector_afss = to_bool(where, value);
        else if (key == "time_budget")
          m.time_budget_seconds = to_double(where, value);
        else if (key == "blocks")
          m.blocks = parse_blocks(where, value);
        else if (key.rfind("width.", 0) == 0)
          m.widths[static_cast<int>(to_param(where, key.substr(6)))] = to_double(where, value);
        else
          unknown_key(section, key);
      } else if (section == "study") {
        if (key == "replications")
          cfg.replications = static_cast<int>(to_int(where, value));
        else if (key == "seed")
          cfg.study_seed = to_u64(where, value);
        else if (key == "threads")
          cfg.study_threads = static_cast<int>(to_int(where, value));
        else if (key == "max_gelman_rubin")
          cfg.thresholds.max_gelman_rubin = to_double(where, value);
        else if (key == "min_ess")
          cfg.thresholds.min_ess = to_double(where, value);
        else if (key == "orders") {
          cfg.orders.clear();
          for (const auto& s : split_on(value, ',')) cfg.orders.push_back(static_cast<int>(to_int(where, s)));
        } else if (key == "threshold")
          cfg.order_threshold = to_double(where, value);
        else if (key == "prior_m")
          cfg.study_prior_m = parse_prior(value);
        else
          unknown_key(section, key);
      } else if (section == "curve") {
        if (key == "distances")
          cfg.curve_distances = parse_distance_grid(value);
        else
          unknown_key(section, key);
      } else if (section.rfind("variant.", 0) == 0) {
        // Variants start from the [model] section wherever they appear in the file.
        (void)key;
      } else {
        throw ConfigError("unknown section [" + section + "]");
      }
    }
  }
  for (const auto& section : variant_sections) {
    VariantSection v;
    v.name = section.substr(8);
    if (v.name.empty()) throw ConfigError("variant section without a name");
    v.model = cfg.model;
    if (const auto body = tree.get_child_optional(pt::ptree::path_type(section, '\0')))
      for (const auto& [key, node] : *body)
        if (!apply_model_key(v.model, section, key, trim(node.data()))) unknown_key(section, key);
    cfg.variants.push_back(std::move(v));
  }
  cfg.mcmc.fixed = cfg.model.fixed;
  cfg.mcmc.constraints = cfg.model.constraints;
  if (cfg.horizon < 1) throw ConfigError("model.horizon must be at least 1");
  if (cfg.model.order) cfg.neighborhood.order = *cfg.model.order;
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ModelSpec build_model(const ModelSection& section, int individuals, const std::vector<std::uint8_t>& ward_closed) {
  ModelSpec m;
  m.kernel = section.kernel;
  m.observation = section.observation;
  m.initial = InitialStateDist(individuals, section.initial);
  for (const auto& [id, p] : section.initial_overrides) {
    if (id < 0 || id >= individuals) throw ConfigError("initial state override for unknown individual " + std::to_string(id));
    m.initial.set(id, p);
  }
  if (section.use_ward_closure) m.ward_closed = ward_closed;
  return m;
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hmmilm
