#pragma once

// File formats: spectrum / decay / trajectory / relaxation CSV files with
// "# key: value" metadata lines, YAML reports, and the run manifest.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "vsp/atomic_data.hpp"
#include "vsp/coherence.hpp"
#include "vsp/errors.hpp"
#include "vsp/fitting.hpp"
#include "vsp/pumping.hpp"
#include "vsp/spectroscopy.hpp"

namespace vsp::io {

/// Shortest round-trip decimal form; identical inputs give identical bytes.
inline std::string format(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

/// `x` rounded to `digits` decimal places, so unit conversions print cleanly.
inline double quantize(double x, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::round(x * scale) / scale;
}

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << h;
  return s.str();
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

/// Canonical text of a pulse sequence, for hashing.
inline std::string describe(const PulseSequence& seq) {
  std::ostringstream s;
  auto one = [&](const LaserStage& st) {
    s << to_string(st.role) << '|' << st.transition << '|' << format(st.center_omega) << '|' << format(st.linewidth)
      << '|' << format(st.power) << '|' << format(st.beam_radius) << '|' << format(st.duration) << '|'
      << st.propagation_sign << '|' << (st.profile == LaserProfile::lorentzian ? "L" : "G") << ';';
  };
  for (const auto& st : seq.preamble) one(st);
  s << "x" << seq.repeat << ':';
  for (const auto& st : seq.stages) one(st);
  return s.str();
}

// ---------------------------------------------------------------------------
// CSV reading

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_number(std::string_view text, int row, std::string_view column) {
  text = trim(text);
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size())
    throw IngestionError("column " + std::string(column) + ": '" + std::string(text) + "' is not a number", row);
  if (!std::isfinite(v)) throw IngestionError("column " + std::string(column) + ": non-finite value", row);
  return v;
}

struct Table {
  std::map<std::string, std::string> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<int> row_lines;  // 1-based file line of each data row
};

/// Reads metadata, a header line and numeric rows. `required` columns must
/// lead the header in order; `optional` may follow.
inline Table read_table(const std::filesystem::path& path, const std::vector<std::string>& required,
                        const std::vector<std::string>& optional = {}) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path.string() + "'");
  Table t;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      if (have_header) throw IngestionError("metadata line after the header", lineno);
      const auto body = trim(sv.substr(1));
      const auto colon = body.find(':');
      if (colon != std::string_view::npos)
        t.metadata[std::string(trim(body.substr(0, colon)))] = std::string(trim(body.substr(colon + 1)));
      continue;
    }
    const auto cells = split(sv);
    if (!have_header) {
      for (auto c : cells) t.header.emplace_back(trim(c));
      if (t.header.size() < required.size() || t.header.size() > required.size() + optional.size())
        throw IngestionError("unexpected column count in header", lineno);
      for (std::size_t i = 0; i < t.header.size(); ++i) {
        const std::string& want = i < required.size() ? required[i] : optional[i - required.size()];
        if (t.header[i] != want)
          throw IngestionError("expected column '" + want + "', found '" + t.header[i] + "'", lineno);
      }
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw IngestionError("expected " + std::to_string(t.header.size()) + " columns, found " +
                               std::to_string(cells.size()),
                           lineno);
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) row[i] = parse_number(cells[i], lineno, t.header[i]);
    t.rows.push_back(std::move(row));
    t.row_lines.push_back(lineno);
  }
  if (!have_header) throw IngestionError("'" + path.string() + "' has no header line");
  if (t.rows.empty()) throw IngestionError("'" + path.string() + "' has no data rows");
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Spectrum

inline void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& s) {
  s.validate();
  auto out = open_output(path);
  out << "# temperature_K: " << format(s.temperature) << '\n';
  out << "# reference_transition: " << s.reference_label << '\n';
  out << "# reference_frequency_THz: " << format(s.reference_omega / constants::two_pi * 1e-12) << '\n';
  out << "# probe_sign: " << s.probe_sign << '\n';
  if (!s.sequence_hash.empty()) out << "# sequence_hash: " << s.sequence_hash << '\n';
  const bool unc = !s.od_uncertainty.empty();
  out << "detuning_MHz,OD" << (unc ? ",OD_uncertainty" : "") << '\n';
  const auto det = s.detuning_mhz();
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << format(quantize(det[i], 6)) << ',' << format(s.od[i]);
    if (unc) out << ',' << format(s.od_uncertainty[i]);
    out << '\n';
  }
}

/// Reads a spectrum CSV. Detunings are converted to absolute frequencies with
/// the file's reference transition (looked up in `species`), falling back to
/// the species' probe reference when the file names none.
inline Spectrum read_spectrum_csv(const std::filesystem::path& path, const Species& species) {
  const auto t = detail::read_table(path, {"detuning_MHz", "OD"}, {"OD_uncertainty"});
  Spectrum s;
  const auto ref_it = t.metadata.find("reference_transition");
  const std::string ref_label = ref_it != t.metadata.end() ? ref_it->second : species.probe_reference;
  const Transition* ref = species.find_transition(ref_label);
  if (!ref) throw IngestionError("unknown reference transition '" + ref_label + "' for species " + species.name);
  s.reference_omega = ref->omega0;
  s.reference_label = ref->label;
  auto meta_number = [&](const std::string& key, double fallback) {
    const auto it = t.metadata.find(key);
    if (it == t.metadata.end()) return fallback;
    return detail::parse_number(it->second, 0, key);
  };
  s.temperature = meta_number("temperature_K", 0.0);
  const double sign = meta_number("probe_sign", -1.0);
  if (sign != 1.0 && sign != -1.0) throw IngestionError("probe_sign must be +1 or -1");
  s.probe_sign = static_cast<int>(sign);
  if (auto it = t.metadata.find("sequence_hash"); it != t.metadata.end()) s.sequence_hash = it->second;
  const bool unc = t.header.size() == 3;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const int line = t.row_lines[r];
    const double omega = ref->omega0 + constants::mhz_to_rad_s(row[0]);
    if (!s.omega.empty() && !(omega > s.omega.back()))
      throw IngestionError("detuning must be strictly increasing", line);
    s.omega.push_back(omega);
    s.od.push_back(row[1]);
    if (unc) {
      if (!(row[2] > 0.0)) throw IngestionError("OD_uncertainty must be positive", line);
      s.od_uncertainty.push_back(row[2]);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Relaxation series

inline RelaxationSeries read_relaxation_csv(const std::filesystem::path& path) {
  const auto t = detail::read_table(path, {"time_s", "transmission"});
  RelaxationSeries s;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (!s.time.empty() && !(t.rows[r][0] > s.time.back()))
      throw IngestionError("time_s must be strictly increasing", t.row_lines[r]);
    s.time.push_back(t.rows[r][0]);
    s.transmission.push_back(t.rows[r][1]);
  }
  return s;
}

inline void write_relaxation_csv(const std::filesystem::path& path, const RelaxationSeries& s,
                                 const std::vector<double>* model = nullptr) {
  auto out = open_output(path);
  out << "time_s,transmission" << (model ? ",model" : "") << '\n';
  for (std::size_t i = 0; i < s.time.size(); ++i) {
    out << format(s.time[i]) << ',' << format(s.transmission[i]);
    if (model) out << ',' << format((*model)[i]);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Coherence decay, trajectory

inline void write_decay_csv(const std::filesystem::path& path, const CoherenceDecay& d) {
  auto out = open_output(path);
  out << "# k_r_per_m: " << format(d.k_r) << '\n';
  out << "# storage_lifetime_ns: " << format(d.storage_lifetime * 1e9) << '\n';
  out << "# dephasing_rate_per_s: " << format(d.dephasing_rate) << '\n';
  out << "# dephasing_time_ns: " << format(d.dephasing_time * 1e9) << '\n';
  out << "# memory_lifetime_ns: " << format(d.memory_lifetime * 1e9) << '\n';
  out << "time_ns,overlap_sq\n";
  for (std::size_t i = 0; i < d.time.size(); ++i) out << format(d.time[i] * 1e9) << ',' << format(d.overlap_sq[i]) << '\n';
}

inline void write_trajectory_csv(const std::filesystem::path& path, const PopulationState& initial,
                                 const Trajectory& traj) {
  auto out = open_output(path);
  out << "time,vz,n3,n4,ne1,ne2\n";
  auto dump = [&](const PopulationState& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto& n = s.classes[i];
      out << format(s.time) << ',' << format(s.grid->velocity(i)) << ',' << format(n[aux_slot]) << ','
          << format(n[ground_slot]) << ',' << format(n[excited1_slot]) << ',' << format(n[excited2_slot]) << '\n';
    }
  };
  dump(initial);
  for (const auto& s : traj.snapshots) dump(s);
}

// ---------------------------------------------------------------------------
// YAML documents

/// YAML scalar for a possibly unbounded time in ns.
inline YAML::Node time_ns(double seconds) {
  if (std::isinf(seconds)) return YAML::Node("unbounded");
  if (std::isnan(seconds)) return YAML::Node();
  return YAML::Node(seconds * 1e9);
}

namespace detail {

// yaml-cpp stores numbers with 17 significant digits; rewrite every numeric
// scalar in its shortest round-trip form.
inline void shorten_numbers(YAML::Node node) {
  if (node.IsScalar()) {
    const std::string& text = node.Scalar();
    double x = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
    if (ec == std::errc() && end == text.data() + text.size() && std::isfinite(x)) node = format(x);
    return;
  }
  if (node.IsSequence())
    for (std::size_t i = 0; i < node.size(); ++i) shorten_numbers(node[i]);
  else if (node.IsMap())
    for (auto kv : node) shorten_numbers(kv.second);
}

}  // namespace detail

inline void write_yaml(const std::filesystem::path& path, const YAML::Node& doc) {
  YAML::Node copy = YAML::Clone(doc);
  detail::shorten_numbers(copy);
  auto out = open_output(path);
  YAML::Emitter em;
  em << copy;
  out << em.c_str() << '\n';
}

/// Fit report, schema vsp-fit-report/1.
inline YAML::Node fit_report(const SpectrumFitResult& r, const SpectrumFitParams& initial) {
  YAML::Node doc;
  doc["schema"] = "vsp-fit-report/1";
  doc["status"] = to_string(r.status);
  auto params = [](const SpectrumFitParams& p) {
    YAML::Node n;
    n["power_mW"] = p.power * 1e3;
    n["linewidth_MHz"] = constants::rad_s_to_mhz(p.linewidth);
    n["velocity_class_m_s"] = p.velocity;
    return n;
  };
  doc["initial"] = params(initial);
  doc["fitted"] = params(r.params);
  YAML::Node u;
  u["power_mW"] = r.uncertainty[0] * 1e3;
  u["linewidth_MHz"] = constants::rad_s_to_mhz(r.uncertainty[1]);
  u["velocity_class_m_s"] = r.uncertainty[2];
  doc["uncertainty"] = u;
  doc["residual_sum_of_squares"] = r.residual;
  doc["points"] = r.residuals.size();
  doc["iterations"] = r.iterations;
  doc["evaluations"] = r.evaluations;
  doc["effective_steps"] = r.effective_steps;
  return doc;
}

/// Relaxation report, schema vsp-relaxation-report/1.
inline YAML::Node relaxation_report(const RelaxationFit& f) {
  YAML::Node doc;
  doc["schema"] = "vsp-relaxation-report/1";
  doc["status"] = to_string(f.status);
  doc["degenerate"] = f.degenerate;
  doc["fast_component_identified"] = f.fast_identified;
  doc["A1"] = f.a1;
  doc["A2"] = f.a2;
  auto rate = [](double g) { return std::isfinite(g) ? YAML::Node(g) : YAML::Node(); };
  doc["gamma_s_per_s"] = rate(f.gamma_s);
  doc["gamma_f_per_s"] = rate(f.gamma_f);
  doc["c"] = f.c;
  doc["residual_sum_of_squares"] = f.residual;
  if (f.covariance.size() == 25) {
    const char* names[] = {"A1", "A2", "gamma_s_per_s", "gamma_f_per_s", "c"};
    YAML::Node u;
    for (int i = 0; i < 5; ++i) u[names[i]] = std::sqrt(std::max(0.0, f.covariance(i, i)));
    doc["uncertainty"] = u;
  }
  if (!f.note.empty()) doc["note"] = f.note;
  return doc;
}

}  // namespace vsp::io
