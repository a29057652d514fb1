#pragma once

// Loader for the species data files (schema "vsp-species/1", see
// data/species/*.yaml). All quantities are converted to SI with angular
// frequencies in rad/s; Einstein coefficients are derived per hyperfine pair.

#include <cmath>
#include <map>
#include <string>

#include <yaml-cpp/yaml.h>

#include "vsp/atomic_data.hpp"
#include "vsp/yaml_util.hpp"

namespace vsp {

namespace detail {

inline HyperfineLevel parse_level(const YAML::Node& node) {
  yaml::check_keys(node, {"label", "F", "offset_MHz"}, "hyperfine level");
  HyperfineLevel level;
  level.label = yaml::require<std::string>(node, "label", "hyperfine level");
  level.F = yaml::require<double>(node, "F", "hyperfine level");
  const double twice_f = 2.0 * level.F;
  if (level.F < 0.0 || std::abs(twice_f - std::round(twice_f)) > 1e-12)
    throw ConfigError("F must be a non-negative half-integer", yaml::line_of(node["F"]));
  level.degeneracy = static_cast<int>(std::lround(twice_f)) + 1;
  level.energy_offset = constants::mhz_to_rad_s(yaml::require<double>(node, "offset_MHz", "hyperfine level"));
  return level;
}

inline void check_level_order(const Manifold& m, int line) {
  for (std::size_t i = 1; i < m.levels.size(); ++i) {
    const auto& a = m.levels[i - 1];
    const auto& b = m.levels[i];
    if (!(b.F > a.F) || !(b.energy_offset > a.energy_offset))
      throw ConfigError("levels of manifold " + m.name + " must be listed with strictly increasing F and energy",
                        line);
  }
}

inline int find_level(const Manifold& m, const std::string& label, int line) {
  for (std::size_t i = 0; i < m.levels.size(); ++i)
    if (m.levels[i].label == label) return static_cast<int>(i);
  throw ConfigError("manifold " + m.name + " has no level '" + label + "'", line);
}

}  // namespace detail

/// Relative tolerance used for the Einstein-relation and strength-sum checks.
inline constexpr double species_consistency_tolerance = 1e-9;

/// Throws ConfigError when an invariant of the species is violated.
inline void validate_species(const Species& s) {
  if (!(s.mass > 0.0)) throw ConfigError("species mass must be positive");
  if (s.manifolds.empty() || s.ground().levels.size() != 2)
    throw ConfigError("species " + s.name + " must have exactly two ground hyperfine levels");
  if (s.memory_ground == s.auxiliary) throw ConfigError("memory ground and auxiliary level must differ");
  for (const auto& m : s.manifolds)
    for (const auto& l : m.levels)
      if (l.degeneracy < 1 || l.degeneracy != static_cast<int>(std::lround(2.0 * l.F)) + 1)
        throw ConfigError("degeneracy of " + l.label + " is not 2F+1");
  for (const auto& t : s.transitions) {
    if (t.lower.manifold != 0 || t.upper.manifold <= 0 ||
        t.upper.manifold >= static_cast<int>(s.manifolds.size()))
      throw ConfigError("transition " + t.label + " references unknown levels");
    const auto& lo = s.level(t.lower);
    const auto& up = s.level(t.upper);
    if (std::abs(lo.F - up.F) > 1.0 + 1e-12 || (lo.F == 0.0 && up.F == 0.0))
      throw ConfigError("transition " + t.label + " violates the dipole selection rule");
    if (!(t.omega0 > 0.0) || !(t.einstein_a >= 0.0) || !(t.einstein_b >= 0.0) || !(t.linewidth > 0.0))
      throw ConfigError("transition " + t.label + " has non-physical constants");
    const double a = einstein_a_from_b(t.einstein_b, t.omega0, lo.degeneracy, up.degeneracy);
    if (std::abs(a - t.einstein_a) > species_consistency_tolerance * std::max(t.einstein_a, 1e-300))
      throw ConfigError("transition " + t.label + " violates the Einstein A/B relation");
  }
}

inline Species parse_species(const YAML::Node& root) {
  yaml::check_keys(root, {"schema", "name", "provenance", "mass_kg", "nuclear_spin", "ground", "memory_ground",
                          "auxiliary", "lines", "pumping", "probe", "vapour_pressure", "ladders"},
                   "species file");
  if (yaml::require<std::string>(root, "schema", "species file") != "vsp-species/1")
    throw ConfigError("unsupported species schema", yaml::line_of(root["schema"]));

  Species s;
  s.name = yaml::require<std::string>(root, "name", "species file");
  s.mass = yaml::require<double>(root, "mass_kg", "species file");
  s.nuclear_spin = yaml::require<double>(root, "nuclear_spin", "species file");
  if (const auto prov = root["provenance"]) {
    if (prov.IsSequence())
      for (const auto& p : prov) s.provenance.push_back(p.as<std::string>());
    else
      s.provenance.push_back(prov.as<std::string>());
  }

  const YAML::Node g = root["ground"];
  if (!g) throw ConfigError("missing key 'ground' in species file", yaml::line_of(root));
  yaml::check_keys(g, {"name", "J", "levels"}, "ground manifold");
  Manifold ground;
  ground.name = yaml::require<std::string>(g, "name", "ground manifold");
  ground.J = yaml::require<double>(g, "J", "ground manifold");
  for (const auto& l : g["levels"]) ground.levels.push_back(detail::parse_level(l));
  detail::check_level_order(ground, yaml::line_of(g));
  if (ground.levels.size() != 2)
    throw ConfigError("ground manifold must have exactly two hyperfine levels", yaml::line_of(g));
  s.manifolds.push_back(ground);
  s.memory_ground = detail::find_level(s.manifolds[0], yaml::require<std::string>(root, "memory_ground", "species"),
                                       yaml::line_of(root["memory_ground"]));
  s.auxiliary = detail::find_level(s.manifolds[0], yaml::require<std::string>(root, "auxiliary", "species"),
                                   yaml::line_of(root["auxiliary"]));

  const YAML::Node lines = root["lines"];
  if (!lines || !lines.IsSequence()) throw ConfigError("'lines' must be a list", yaml::line_of(root));
  for (const auto& ln : lines) {
    yaml::check_keys(ln, {"name", "excited", "J", "frequency_THz", "lifetime_ns", "levels", "strengths"}, "line");
    Manifold m;
    m.line = yaml::require<std::string>(ln, "name", "line");
    m.name = yaml::require<std::string>(ln, "excited", "line");
    m.J = yaml::require<double>(ln, "J", "line");
    m.centroid_omega = constants::two_pi * 1e12 * yaml::require<double>(ln, "frequency_THz", "line");
    const double lifetime = 1e-9 * yaml::require<double>(ln, "lifetime_ns", "line");
    if (!(lifetime > 0.0)) throw ConfigError("lifetime must be positive", yaml::line_of(ln["lifetime_ns"]));
    m.linewidth = 1.0 / lifetime;
    for (const auto& l : ln["levels"]) m.levels.push_back(detail::parse_level(l));
    detail::check_level_order(m, yaml::line_of(ln));
    s.manifolds.push_back(m);
    const int mi = static_cast<int>(s.manifolds.size()) - 1;
    const Manifold& ex = s.manifolds.back();

    std::map<int, double> strength_sum;
    for (const auto& st : ln["strengths"]) {
      yaml::check_keys(st, {"lower", "upper", "S"}, "strength factor");
      const int line_no = yaml::line_of(st);
      const LevelRef lower{0, detail::find_level(s.manifolds[0], yaml::require<std::string>(st, "lower", "strength"),
                                                 line_no)};
      const LevelRef upper{mi, detail::find_level(ex, yaml::require<std::string>(st, "upper", "strength"), line_no)};
      const double strength = yaml::as_rational(st["S"], "S");
      const auto& lo = s.level(lower);
      const auto& up = s.level(upper);
      if (std::abs(lo.F - up.F) > 1.0 + 1e-12)
        throw ConfigError("strength factor " + lo.label + "->" + up.label + " violates the selection rule", line_no);
      strength_sum[lower.level] += strength;

      Transition t;
      t.label = ex.line + " " + lo.label + "->" + up.label;
      t.lower = lower;
      t.upper = upper;
      t.omega0 = ex.centroid_omega + up.energy_offset - lo.energy_offset;
      t.linewidth = ex.linewidth;
      // Branching of the upper level into F: (g_F / g_F') (2J'+1)/(2J+1) S_FF'.
      t.einstein_a = static_cast<double>(lo.degeneracy) / static_cast<double>(up.degeneracy) * (2.0 * ex.J + 1.0) /
                     (2.0 * s.manifolds[0].J + 1.0) * strength * ex.linewidth;
      t.einstein_b = einstein_b_from_a(t.einstein_a, t.omega0, lo.degeneracy, up.degeneracy);
      s.transitions.push_back(t);
    }
    for (const auto& [lvl, sum] : strength_sum)
      if (std::abs(sum - 1.0) > species_consistency_tolerance)
        throw ConfigError("strength factors from " + s.manifolds[0].levels[static_cast<std::size_t>(lvl)].label +
                              " on " + ex.line + " do not sum to 1",
                          yaml::line_of(ln));
  }

  if (const auto p = root["pumping"]) {
    yaml::check_keys(p, {"pump", "pump_back"}, "pumping");
    s.pump_transition = yaml::require<std::string>(p, "pump", "pumping");
    s.pump_back_transition = yaml::require<std::string>(p, "pump_back", "pumping");
  }
  if (const auto p = root["probe"]) {
    yaml::check_keys(p, {"line", "reference"}, "probe");
    s.probe_line = yaml::require<std::string>(p, "line", "probe");
    s.probe_reference = yaml::require<std::string>(p, "reference", "probe");
  }
  if (const auto vp = root["vapour_pressure"]) {
    yaml::check_keys(vp, {"melting_point_K", "solid", "liquid"}, "vapour_pressure");
    VapourPressureModel m;
    m.melting_point = yaml::require<double>(vp, "melting_point_K", "vapour_pressure");
    m.solid_a = yaml::require<double>(vp["solid"], "a", "vapour_pressure.solid");
    m.solid_b = yaml::require<double>(vp["solid"], "b", "vapour_pressure.solid");
    m.liquid_a = yaml::require<double>(vp["liquid"], "a", "vapour_pressure.liquid");
    m.liquid_b = yaml::require<double>(vp["liquid"], "b", "vapour_pressure.liquid");
    s.vapour_pressure = m;
  }
  for (const auto& l : root["ladders"]) {
    yaml::check_keys(l, {"name", "signal_nm", "control_nm", "storage_lifetime_ns"}, "ladder");
    s.ladders.push_back({yaml::require<std::string>(l, "name", "ladder"),
                         1e-9 * yaml::require<double>(l, "signal_nm", "ladder"),
                         1e-9 * yaml::require<double>(l, "control_nm", "ladder"),
                         1e-9 * yaml::require<double>(l, "storage_lifetime_ns", "ladder")});
  }

  validate_species(s);
  for (const auto* label : {&s.pump_transition, &s.pump_back_transition, &s.probe_reference})
    if (!label->empty()) (void)s.transition(*label);
  return s;
}

inline Species load_species(const std::string& path) { return parse_species(yaml::load_file(path)); }

}  // namespace vsp
