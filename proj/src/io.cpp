// SPDX-License-Identifier: Apache-2.0

#include "cmag/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cmag/error.hpp"

namespace cmag {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kFieldTag = "cmag-field";

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  require(os.good(), ErrorCode::io, "cannot open '" + path + "' for writing");
  os.exceptions(std::ios::badbit);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), ErrorCode::io, "cannot open '" + path + "'");
  return is;
}

double get_number(const json& j, const char* key) {
  require(j.contains(key) && j.at(key).is_number(), ErrorCode::io, std::string("missing numeric field '") + key + "'");
  return j.at(key).get<double>();
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json config_json(const ExperimentConfig& c) {
  json j;
  j["scenario"] = to_string(c.scenario);
  j["N"] = c.N;
  j["T"] = c.T;
  j["m_values"] = c.m_values;
  j["trials"] = c.trials;
  j["msqe_threshold"] = c.msqe_threshold;
  j["msqe_time_unit"] = c.msqe_time_unit;
  j["master_seed"] = c.master_seed;
  j["n_reps"] = c.n_reps;
  j["noise_sigma"] = c.noise_sigma;
  j["noise_margin"] = c.noise_margin;
  j["noise_terms"] = c.noise.terms.size();
  j["spike_events"] = c.spike_events;
  j["spike_half_width"] = c.spike_half_width;
  j["spike_amplitude"] = c.spike_amplitude;
  j["noisy_sparsity"] = c.noisy_sparsity;
  j["tones"] = c.tones;
  j["fixed_reciprocals"] = c.fixed_reciprocals;
  j["multitone_basis"] = to_string(c.multitone_basis);
  j["multitone_exact_integrals"] = c.multitone_exact_integrals;
  j["solver"] = {{"method", c.solver.method == SolverMethod::homotopy ? "homotopy" : "admm"},
                 {"feasibility_tol", c.solver.feasibility_tol},
                 {"optimality_tol", c.solver.optimality_tol},
                 {"max_iterations", c.solver.max_iterations}};
  return j;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string field_to_json(const FieldModel& field) {
  validate(field);
  json j;
  j["format"] = kFieldTag;
  j["format_version"] = kFormatVersion;
  std::visit(
      [&j](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        j["T"] = f.T;
        if constexpr (std::is_same_v<F, SpikeTrainField>) {
          j["kind"] = "spike_train";
          j["events"] = json::array();
          for (const auto& e : f.events) {
            j["events"].push_back({{"t_start", e.t_start}, {"amplitude", e.amplitude}, {"half_width", e.half_width}});
          }
        } else {
          j["kind"] = "multitone";
          j["tones"] = json::array();
          for (const auto& t : f.tones) {
            j["tones"].push_back({{"amplitude", t.amplitude}, {"frequency", t.frequency}, {"phase", t.phase}});
          }
        }
      },
      field);
  return j.dump(2) + "\n";
}

FieldModel field_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::io, std::string("field JSON does not parse: ") + e.what());
  }
  require(j.is_object() && j.value("format", "") == kFieldTag, ErrorCode::io, "not a cmag field file");
  require(j.value("format_version", 0) == kFormatVersion, ErrorCode::io, "unsupported field format version");
  const std::string kind = j.value("kind", "");
  FieldModel out;
  if (kind == "spike_train") {
    SpikeTrainField f;
    f.T = get_number(j, "T");
    for (const auto& e : j.at("events")) {
      f.events.push_back({get_number(e, "t_start"), get_number(e, "amplitude"), get_number(e, "half_width")});
    }
    out = f;
  } else if (kind == "multitone") {
    MultiToneField f;
    f.T = get_number(j, "T");
    for (const auto& t : j.at("tones")) {
      f.tones.push_back({get_number(t, "amplitude"), get_number(t, "frequency"), get_number(t, "phase")});
    }
    out = f;
  } else {
    fail(ErrorCode::io, "unknown field kind '" + kind + "'");
  }
  validate(out);
  return out;
}

void save_field(const std::string& path, const FieldModel& field) {
  auto os = open_out(path);
  os << field_to_json(field);
}

FieldModel load_field(const std::string& path) {
  auto is = open_in(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return field_from_json(ss.str());
}

void write_matrix(std::ostream& os, const Eigen::MatrixXd& A) {
  os << "# cmag-matrix format-version " << kFormatVersion << "\n";
  os << A.rows() << ' ' << A.cols() << "\n";
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (j) os << ' ';
      os << format_double(A(i, j));
    }
    os << "\n";
  }
}

Eigen::MatrixXd read_matrix(std::istream& is) {
  std::string line;
  std::stringstream body;
  while (std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    body << line << '\n';
  }
  long long m = -1, n = -1;
  require(static_cast<bool>(body >> m >> n) && m >= 1 && n >= 1, ErrorCode::io, "matrix header must be 'm n'");
  Eigen::MatrixXd A(m, n);
  std::string tok;
  for (long long k = 0; k < m * n; ++k) {
    require(static_cast<bool>(body >> tok), ErrorCode::io, "matrix has fewer than m*n values");
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    require(res.ec == std::errc{} && res.ptr == tok.data() + tok.size(), ErrorCode::io,
            "bad matrix entry '" + tok + "'");
    A(k / n, k % n) = v;
  }
  require(!(body >> tok), ErrorCode::io, "matrix has more than m*n values");
  return A;
}

void save_matrix(const std::string& path, const Eigen::MatrixXd& A) {
  auto os = open_out(path);
  write_matrix(os, A);
}

Eigen::MatrixXd load_matrix(const std::string& path) {
  auto is = open_in(path);
  return read_matrix(is);
}

void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "# cmag-sweep format-version " << r.format_version << "\n";
  os << "m,trials,successes,p_suc\n";
  for (const auto& p : r.points) {
    os << p.m << ',' << p.trials << ',' << p.successes << ',' << format_double(p.p_suc) << "\n";
  }
}

std::string sweep_to_json(const SweepResult& r) {
  json j;
  j["format"] = "cmag-sweep";
  j["format_version"] = r.format_version;
  j["config"] = config_json(r.config);
  j["points"] = json::array();
  for (const auto& p : r.points) {
    j["points"].push_back({{"m", p.m},
                           {"trials", p.trials},
                           {"successes", p.successes},
                           {"p_suc", p.p_suc},
                           {"mean_failure_msqe", p.mean_failure_msqe},
                           {"median_recovery_error", p.median_recovery_error}});
  }
  j["records"] = json::array();
  for (const auto& t : r.records) {
    json rec = {{"seed", t.seed},
                {"m", t.m},
                {"msqe", finite_or_null(t.msqe)},
                {"success", t.success},
                {"iterations", t.iterations},
                {"converged", t.converged},
                {"polished", t.polished},
                {"duality_gap", finite_or_null(t.duality_gap)},
                {"l1_value", finite_or_null(t.l1_value)},
                {"residual_norm", finite_or_null(t.residual_norm)},
                {"epsilon", t.epsilon},
                {"recovery_error", finite_or_null(t.recovery_error)}};
    if (!t.failure.empty()) rec["failure"] = t.failure;
    if (r.config.record_timing) rec["wall_time"] = t.wall_time;
    j["records"].push_back(std::move(rec));
  }
  return j.dump(2) + "\n";
}

void save_sweep(const std::string& path, const SweepResult& result, bool as_json) {
  auto os = open_out(path);
  if (as_json) os << sweep_to_json(result);
  else write_sweep_csv(os, result);
}

void write_series(std::ostream& os, const std::vector<double>& t, const std::vector<double>& value) {
  require(t.size() == value.size(), ErrorCode::domain, "time and value columns differ in length");
  os << "# cmag-series format-version " << kFormatVersion << "\n";
  os << "# t_s value_nT\n";
  for (std::size_t i = 0; i < t.size(); ++i) os << format_double(t[i]) << ' ' << format_double(value[i]) << "\n";
}

void save_series(const std::string& path, const std::vector<double>& t, const std::vector<double>& value) {
  auto os = open_out(path);
  write_series(os, t, value);
}

}  // namespace cmag
