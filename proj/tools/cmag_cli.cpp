// SPDX-License-Identifier: Apache-2.0
//
// cmag: command-line front end over the C API.
//   exit 0  ok
//   exit 1  bad configuration, bad input, or a library error
//   exit 2  a check did not hold (rip-check, quadrature-check)

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmag/cmag.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitCheck = 2;

struct Failure {
  int code;
};

void check(cmag_status s, const char* what) {
  if (s == CMAG_OK) return;
  std::fprintf(stderr, "cmag: %s: %s (%s)\n", what, cmag_last_error(), cmag_status_string(s));
  throw Failure{s == CMAG_ERR_CHECK ? kExitCheck : kExitConfig};
}

const std::map<std::string, cmag_scenario> kScenarios = {
    {"walsh_spike", CMAG_SCENARIO_WALSH_SPIKE},       {"random_multitone", CMAG_SCENARIO_RANDOM_MULTITONE},
    {"random_spike", CMAG_SCENARIO_RANDOM_SPIKE},     {"quadrature_gap", CMAG_SCENARIO_QUADRATURE_GAP},
    {"noisy", CMAG_SCENARIO_NOISY}};

const std::map<std::string, cmag_basis> kBases = {{"spike", CMAG_BASIS_SPIKE},
                                                  {"walsh", CMAG_BASIS_WALSH_SEQUENCY},
                                                  {"walsh_sequency", CMAG_BASIS_WALSH_SEQUENCY},
                                                  {"walsh_paley", CMAG_BASIS_WALSH_PALEY},
                                                  {"fourier_real", CMAG_BASIS_FOURIER_REAL},
                                                  {"dct", CMAG_BASIS_DCT}};

const std::map<std::string, cmag_ensemble> kEnsembles = {{"bernoulli", CMAG_ENSEMBLE_BERNOULLI},
                                                         {"gaussian", CMAG_ENSEMBLE_GAUSSIAN},
                                                         {"ternary", CMAG_ENSEMBLE_TERNARY},
                                                         {"sphere", CMAG_ENSEMBLE_SPHERE_COLUMNS},
                                                         {"projection", CMAG_ENSEMBLE_PROJECTION}};

template <class Map>
auto lookup(const Map& m, const std::string& key, const char* what) {
  auto it = m.find(key);
  if (it == m.end()) {
    std::fprintf(stderr, "cmag: unknown %s '%s'\n", what, key.c_str());
    throw Failure{kExitConfig};
  }
  return it->second;
}

// "lo:hi:step" or "lo:hi" (step 10)
std::vector<size_t> parse_range(const std::string& s) {
  std::vector<size_t> parts;
  size_t pos = 0;
  try {
    while (pos <= s.size()) {
      const size_t next = s.find(':', pos);
      const std::string tok = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      size_t used = 0;
      const unsigned long long v = std::stoull(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      parts.push_back(static_cast<size_t>(v));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
  } catch (const std::exception&) {
    parts.clear();
  }
  if (parts.size() == 2) parts.push_back(10);
  if (parts.size() != 3 || parts[2] == 0 || parts[0] > parts[1]) {
    std::fprintf(stderr, "cmag: --m-range must be lo:hi[:step] with lo <= hi and step > 0\n");
    throw Failure{kExitConfig};
  }
  std::vector<size_t> out;
  for (size_t m = parts[0]; m <= parts[1]; m += parts[2]) out.push_back(m);
  return out;
}

struct Common {
  std::optional<uint64_t> seed;
  std::string out;
  std::string format = "csv";
};

struct SweepArgs {
  std::string scenario = "walsh_spike";
  std::optional<int> n_order;
  std::vector<size_t> m;
  std::string m_range;
  std::optional<int> trials;
  bool full = false;
  std::optional<double> threshold;
  std::optional<double> noise_sigma;
  std::optional<uint64_t> n_reps;
  unsigned threads = 1;
  std::string basis;
  bool exact_integrals = false;
  bool timing = false;
  int trial_index = 0;
  std::string dump_rec;
  std::string dump_truth;
  std::string save_field;
};

void add_experiment_flags(CLI::App* app, SweepArgs& a) {
  app->add_option("--scenario", a.scenario, "walsh_spike, random_multitone, random_spike, quadrature_gap, noisy");
  app->add_option("--n-order", a.n_order, "grid order N (n = 2^N)");
  app->add_option("--threshold", a.threshold, "MSQE success threshold, (nT)^2 ms");
  app->add_option("--noise-sigma", a.noise_sigma, "gaussian noise on y (noisy scenario)");
  app->add_option("--n-reps", a.n_reps, "shots per measurement; 0 = noiseless probabilities");
  app->add_option("--basis", a.basis, "sparse basis for multitone runs (dct, fourier_real)");
  app->add_flag("--exact-integrals", a.exact_integrals, "multitone: measure exact integrals, solve BPDN");
}

cmag_experiment_config build_config(const SweepArgs& a, const Common& c) {
  cmag_experiment_config cfg;
  check(cmag_experiment_config_default(lookup(kScenarios, a.scenario, "scenario"), &cfg), "config");
  if (a.n_order) cfg.N = *a.n_order;
  if (!a.m_range.empty()) {
    const auto r = parse_range(a.m_range);
    if (r.size() > CMAG_MAX_M_VALUES) {
      std::fprintf(stderr, "cmag: m grid has more than %d points\n", CMAG_MAX_M_VALUES);
      throw Failure{kExitConfig};
    }
    std::copy(r.begin(), r.end(), cfg.m_values);
    cfg.m_count = r.size();
  }
  if (!a.m.empty()) {
    if (a.m.size() > CMAG_MAX_M_VALUES) throw Failure{kExitConfig};
    std::copy(a.m.begin(), a.m.end(), cfg.m_values);
    cfg.m_count = a.m.size();
  }
  if (a.full) cfg.trials = 1000;
  if (a.trials) cfg.trials = *a.trials;
  if (a.threshold) cfg.msqe_threshold = *a.threshold;
  if (a.noise_sigma) cfg.noise_sigma = *a.noise_sigma;
  if (a.n_reps) cfg.n_reps = *a.n_reps;
  if (c.seed) cfg.master_seed = *c.seed;
  if (!a.basis.empty()) cfg.multitone_basis = lookup(kBases, a.basis, "basis");
  if (a.exact_integrals) cfg.multitone_exact_integrals = 1;
  cfg.threads = a.threads;
  return cfg;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_sweep(const SweepArgs& a, const Common& c) {
  const auto cfg = build_config(a, c);
  cmag_sweep* sweep = nullptr;
  check(cmag_sweep_run(&cfg, &sweep), "sweep");
  std::unique_ptr<cmag_sweep, decltype(&cmag_sweep_free)> guard(sweep, cmag_sweep_free);
  const bool json = c.format == "json";
  check(cmag_sweep_write(sweep, c.out.empty() ? "/dev/stdout" : c.out.c_str(), json ? 1 : 0), "write");
  if (!c.out.empty()) {
    size_t count = 0;
    check(cmag_sweep_point_count(sweep, &count), "sweep");
    for (size_t i = 0; i < count; ++i) {
      cmag_sweep_point p;
      check(cmag_sweep_get_point(sweep, i, &p), "sweep");
      std::fprintf(stderr, "m=%zu p_suc=%.4f (%d/%d)\n", p.m, p.p_suc, p.successes, p.trials);
    }
  }
  return kExitOk;
}

void print_record(const cmag_trial_record& r, const std::string& format, FILE* f) {
  if (format == "json") {
    std::fprintf(f,
                 "{\"format\": \"cmag-trial\", \"format_version\": %d, \"seed\": %" PRIu64
                 ", \"m\": %zu, \"msqe\": %s, \"success\": %s, \"iterations\": %d, \"converged\": %s, "
                 "\"duality_gap\": %s, \"l1_value\": %s, \"residual_norm\": %s, \"epsilon\": %s, "
                 "\"recovery_error\": %s}\n",
                 cmag_format_version(), r.seed, r.m, std::isfinite(r.msqe) ? fmt(r.msqe).c_str() : "null",
                 r.success ? "true" : "false", r.iterations, r.converged ? "true" : "false",
                 fmt(r.duality_gap).c_str(), fmt(r.l1_value).c_str(), fmt(r.residual_norm).c_str(),
                 fmt(r.epsilon).c_str(), fmt(r.recovery_error).c_str());
    return;
  }
  std::fprintf(f, "# cmag-trial format-version %d\n", cmag_format_version());
  std::fprintf(f, "seed,m,msqe,success,iterations,converged,duality_gap,l1_value,residual_norm,epsilon,recovery_error\n");
  std::fprintf(f, "%" PRIu64 ",%zu,%s,%d,%d,%d,%s,%s,%s,%s,%s\n", r.seed, r.m, fmt(r.msqe).c_str(), r.success,
               r.iterations, r.converged, fmt(r.duality_gap).c_str(), fmt(r.l1_value).c_str(),
               fmt(r.residual_norm).c_str(), fmt(r.epsilon).c_str(), fmt(r.recovery_error).c_str());
}

int cmd_trial(const SweepArgs& a, const Common& c) {
  auto cfg = build_config(a, c);
  if (a.m.size() > 1) {
    std::fprintf(stderr, "cmag: trial takes a single --m\n");
    return kExitConfig;
  }
  const size_t m = a.m.empty() ? cfg.m_values[0] : a.m[0];
  cmag_trial_record rec;
  check(cmag_trial_run(&cfg, m, a.trial_index, &rec, a.dump_rec.empty() ? nullptr : a.dump_rec.c_str(),
                       a.dump_truth.empty() ? nullptr : a.dump_truth.c_str()),
        "trial");
  if (!a.save_field.empty()) {
    cmag_field* field = nullptr;
    check(cmag_trial_field(&cfg, m, a.trial_index, &field), "trial");
    const cmag_status st = cmag_field_save(field, a.save_field.c_str());
    cmag_field_free(field);
    check(st, "trial");
  }
  FILE* f = stdout;
  if (!c.out.empty()) {
    f = std::fopen(c.out.c_str(), "w");
    if (!f) {
      std::fprintf(stderr, "cmag: cannot open '%s'\n", c.out.c_str());
      return kExitConfig;
    }
  }
  print_record(rec, c.format, f);
  if (f != stdout) std::fclose(f);
  return kExitOk;
}

struct MatrixArgs {
  std::string matrix;
  std::string ensemble = "bernoulli";
  int n_order = 4;
  size_t m = 8;
  int order = 2;
  double delta = 0.4652;
  uint64_t budget = 0;
};

int cmd_rip(const MatrixArgs& a, const Common& c) {
  cmag_matrix* A = nullptr;
  if (!a.matrix.empty()) {
    check(cmag_matrix_load(a.matrix.c_str(), &A), "load matrix");
  } else {
    check(cmag_matrix_random(lookup(kEnsembles, a.ensemble, "ensemble"), c.seed.value_or(1), a.m,
                             size_t{1} << a.n_order, &A),
          "matrix");
  }
  std::unique_ptr<cmag_matrix, decltype(&cmag_matrix_free)> guard(A, cmag_matrix_free);
  if (!c.out.empty()) check(cmag_matrix_save(A, c.out.c_str()), "save matrix");
  double d = 0.0;
  check(cmag_ric(A, a.order, a.budget, &d), "restricted isometry constant");
  const bool holds = d < a.delta;
  std::printf("delta_%d = %s\nrip(%d, %s): %s\n", a.order, fmt(d).c_str(), a.order, fmt(a.delta).c_str(),
              holds ? "holds" : "violated");
  return holds ? kExitOk : kExitCheck;
}

struct CoherenceArgs {
  std::string phi = "walsh";
  std::string psi = "spike";
  int n_order = 10;
};

int cmd_coherence(const CoherenceArgs& a) {
  double mu = 0.0;
  check(cmag_coherence(lookup(kBases, a.phi, "basis"), lookup(kBases, a.psi, "basis"), a.n_order, &mu), "coherence");
  std::printf("mu(%s, %s; N=%d) = %s\n", a.phi.c_str(), a.psi.c_str(), a.n_order, fmt(mu).c_str());
  return kExitOk;
}

struct QuadArgs {
  std::string field;
  int n_order = 10;
  size_t m = 250;
  int tones = 8;
  std::string pipeline = "both";
};

int cmd_quadrature(const QuadArgs& a, const Common& c) {
  cmag_field* f = nullptr;
  const uint64_t seed = c.seed.value_or(1);
  if (!a.field.empty()) check(cmag_field_load(a.field.c_str(), &f), "load field");
  else check(cmag_field_multitone(seed, a.tones, size_t{1} << a.n_order, 1e-3, &f), "field");
  std::unique_ptr<cmag_field, decltype(&cmag_field_free)> guard(f, cmag_field_free);
  if (a.pipeline != "both" && a.pipeline != "walsh" && a.pipeline != "random") {
    std::fprintf(stderr, "cmag: --pipeline must be walsh, random or both\n");
    return kExitConfig;
  }
  int worst = kExitOk;
  for (int walsh : {0, 1}) {
    if ((walsh && a.pipeline == "random") || (!walsh && a.pipeline == "walsh")) continue;
    double gap = 0.0, bound = 0.0;
    const cmag_status s = cmag_quadrature_check(f, a.n_order, a.m, seed, walsh, &gap, &bound);
    if (s != CMAG_OK && s != CMAG_ERR_CHECK) check(s, "quadrature check");
    std::printf("%s: gap = %s bound = %s %s\n", walsh ? "walsh" : "random", fmt(gap).c_str(), fmt(bound).c_str(),
                s == CMAG_OK ? "ok" : "VIOLATED");
    if (s == CMAG_ERR_CHECK) {
      std::fprintf(stderr, "cmag: %s\n", cmag_last_error());
      worst = kExitCheck;
    }
  }
  return worst;
}

struct ReconArgs {
  std::string field;
  std::string matrix;
  std::string basis = "spike";
  double epsilon = 0.0;
};

int cmd_reconstruct(const ReconArgs& a, const Common& c) {
  cmag_field* f = nullptr;
  cmag_matrix* G = nullptr;
  check(cmag_field_load(a.field.c_str(), &f), "load field");
  std::unique_ptr<cmag_field, decltype(&cmag_field_free)> fg(f, cmag_field_free);
  check(cmag_matrix_load(a.matrix.c_str(), &G), "load matrix");
  std::unique_ptr<cmag_matrix, decltype(&cmag_matrix_free)> gg(G, cmag_matrix_free);
  double e = 0.0;
  check(cmag_reconstruct(f, G, lookup(kBases, a.basis, "basis"), a.epsilon,
                         c.out.empty() ? "/dev/stdout" : c.out.c_str(), &e),
        "reconstruct");
  std::fprintf(c.out.empty() ? stderr : stdout, "msqe = %s (nT)^2 ms\n", fmt(e).c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressive magnetometry: Walsh and random-sequence sensing with l1 recovery"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "master seed");
    sub->add_option("--out", common.out, "output file (default stdout)");
    sub->add_option("--format", common.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "success probability against m");
  add_common(s);
  add_experiment_flags(s, sweep);
  s->add_option("--m", sweep.m, "explicit m values");
  s->add_option("--m-range", sweep.m_range, "lo:hi[:step]");
  s->add_option("--trials", sweep.trials, "trials per m");
  s->add_flag("--full", sweep.full, "1000 trials per m");
  s->add_option("--threads", sweep.threads, "worker threads, 0 = all cores");

  SweepArgs trial;
  auto* t = app.add_subcommand("trial", "one trial with optional reconstruction dump");
  add_common(t);
  add_experiment_flags(t, trial);
  t->add_option("--m", trial.m, "number of measurements");
  t->add_option("--trial", trial.trial_index, "trial index within the grid point");
  t->add_option("--dump", trial.dump_rec, "write the reconstruction series here");
  t->add_option("--dump-truth", trial.dump_truth, "write the simulated field series here");
  t->add_option("--save-field", trial.save_field, "write the trial's field model (JSON) here");

  MatrixArgs rip;
  auto* r = app.add_subcommand("rip-check", "exact restricted isometry constant of a small matrix");
  add_common(r);
  r->add_option("--matrix", rip.matrix, "matrix file; otherwise a random matrix is drawn");
  r->add_option("--ensemble", rip.ensemble, "bernoulli, gaussian, ternary, sphere, projection");
  r->add_option("--n-order", rip.n_order, "columns n = 2^N");
  r->add_option("--m", rip.m, "rows");
  r->add_option("--order", rip.order, "sparsity order S");
  r->add_option("--delta", rip.delta, "pass if delta_S < this");
  r->add_option("--budget", rip.budget, "max supports to enumerate");

  CoherenceArgs coh;
  auto* co = app.add_subcommand("coherence", "mutual coherence of two bases");
  co->add_option("--phi", coh.phi, "measurement basis");
  co->add_option("--psi", coh.psi, "sparse basis");
  co->add_option("--n-order", coh.n_order, "n = 2^N");

  QuadArgs quad;
  auto* q = app.add_subcommand("quadrature-check", "midpoint quadrature gap against its bound");
  add_common(q);
  q->add_option("--field", quad.field, "multitone field file; otherwise one is drawn from --seed");
  q->add_option("--n-order", quad.n_order, "n = 2^N");
  q->add_option("--m", quad.m, "control sequences");
  q->add_option("--tones", quad.tones, "tones in a drawn field");
  q->add_option("--pipeline", quad.pipeline, "walsh, random or both");

  ReconArgs recon;
  auto* rc = app.add_subcommand("reconstruct", "recover a stored field from a stored measurement matrix");
  add_common(rc);
  rc->add_option("--field", recon.field, "field file")->required();
  rc->add_option("--matrix", recon.matrix, "m x 2^N matrix file")->required();
  rc->add_option("--basis", recon.basis, "sparse basis");
  rc->add_option("--epsilon", recon.epsilon, "noise radius, 0 = equality constraints");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc_parse = app.exit(e);
    return rc_parse == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*s) return cmd_sweep(sweep, common);
    if (*t) return cmd_trial(trial, common);
    if (*r) return cmd_rip(rip, common);
    if (*co) return cmd_coherence(coh);
    if (*q) return cmd_quadrature(quad, common);
    if (*rc) return cmd_reconstruct(recon, common);
  } catch (const Failure& f) {
    return f.code;
  }
  return kExitConfig;
}
