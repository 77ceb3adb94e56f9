#include "app.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "etsync/config.hpp"
#include "etsync/io.hpp"
#include "etsync/verify.hpp"

namespace etsync::cli {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError:
      return kParse;
    case ErrorKind::ValidationError:
    case ErrorKind::NotStronglyConnected:
    case ErrorKind::SpectralGapViolation:
    case ErrorKind::LambdaOutOfRange:
    case ErrorKind::VarphiNotLessThanOne:
    case ErrorKind::SingularT:
    case ErrorKind::NotObservable:
    case ErrorKind::NotControllable:
    case ErrorKind::NotHurwitz:
      return kValidation;
    case ErrorKind::SingularMatrix:
    case ErrorKind::NotSymmetric:
    case ErrorKind::NoConvergence:
    case ErrorKind::NotStabilizable:
      return kNumerics;
    case ErrorKind::NonFiniteState:
    case ErrorKind::ZenoGuardTripped:
    case ErrorKind::IoError:
      return kRuntime;
  }
  return kRuntime;
}

namespace {

std::string num(double x) { return io::format_number(x); }

std::string matrix_str(const Matrix& m) {
  std::string s = "[";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    s += i ? ", [" : "[";
    for (std::size_t j = 0; j < m.cols(); ++j) s += (j ? ", " : "") + num(m(i, j));
    s += "]";
  }
  return s + "]";
}

std::string vector_str(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s + "]";
}

const char* flag(bool ok) { return ok ? "PASS" : "FAIL"; }

struct CommonOptions {
  std::optional<double> horizon;
  std::optional<double> step;
  bool unchecked = false;
  std::string kernel;
  int jobs = 1;

  ScenarioOverrides overrides() const {
    ScenarioOverrides ov;
    ov.horizon = horizon;
    ov.step = step;
    if (unchecked) ov.unchecked = true;
    if (kernel == "serial") ov.kernel = KernelMode::Serial;
    if (kernel == "parallel") ov.kernel = KernelMode::Parallel;
    return ov;
  }
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--horizon", o.horizon, "Override the simulated horizon")->check(CLI::NonNegativeNumber);
  sub->add_option("--step", o.step, "Override the integration step")->check(CLI::PositiveNumber);
  sub->add_flag("--unchecked", o.unchecked, "Skip the lambda bound and varphi < 1 design checks");
  sub->add_option("--kernel", o.kernel, "Derivative kernel")->check(CLI::IsMember({"serial", "parallel"}));
}

struct JobOutcome {
  int code = kOk;
  std::string out;
  std::string err;
};

// Runs fn over the inputs with up to `jobs` workers; output is replayed in input order.
template <class Fn>
int for_each_job(const std::vector<std::string>& inputs, int jobs, std::ostream& out, std::ostream& err, Fn fn) {
  std::vector<JobOutcome> results(inputs.size());
  const long n = static_cast<long>(inputs.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, jobs)) if (jobs > 1 && n > 1)
  for (long k = 0; k < n; ++k) {
    auto& r = results[static_cast<std::size_t>(k)];
    std::ostringstream o, e;
    try {
      r.code = fn(static_cast<std::size_t>(k), o, e);
    } catch (const Error& ex) {
      e << "error: " << inputs[static_cast<std::size_t>(k)] << ": " << ex.what() << '\n';
      r.code = exit_code_for(ex.kind());
    } catch (const std::exception& ex) {
      e << "error: " << inputs[static_cast<std::size_t>(k)] << ": " << ex.what() << '\n';
      r.code = kRuntime;
    }
    r.out = o.str();
    r.err = e.str();
  }
  int code = kOk;
  for (const auto& r : results) {
    out << r.out;
    err << r.err;
    if (code == kOk) code = r.code;
  }
  return code;
}

int print_report(std::ostream& os, const std::string& label, const VerifyReport& rep) {
  os << "verify " << label << '\n';
  for (const auto& c : rep.checks) os << "  " << to_string(c.status) << "  " << c.name << ": " << c.detail << '\n';
  os << (rep.passed() ? "  all invariants hold\n" : "  invariant violations found\n");
  return rep.passed() ? kOk : kVerification;
}

}  // namespace

void print_design_report(std::ostream& os, const Scenario& sc) {
  const auto& d = sc.design;
  const auto& s = sc.spectra;
  const double nd = static_cast<double>(sc.agents());
  os << "scenario = " << sc.name << '\n';
  os << "agents = " << sc.agents() << '\n';
  os << "r = " << vector_str(s.r) << '\n';
  os << "lambda2_hat = " << num(s.lambda2_hat) << '\n';
  os << "lambda = " << num(d.lambda) << '\n';
  os << "lambda_bound = " << num(d.lambda_bound) << '\n';
  os << "beta = " << num(d.beta) << '\n';
  os << "beta_from_gains = " << num(d.beta_theory) << '\n';
  os << "P = " << matrix_str(d.P) << '\n';
  os << "K = " << matrix_str(d.K) << '\n';
  os << "norm_A = " << num(d.norm_A) << '\n';
  os << "norm_BBtP = " << num(d.norm_BBtP) << '\n';
  os << "norm_LG = " << num(d.lambda_LG_norm) << '\n';
  os << "b1 = " << num(d.b1) << '\n';
  os << "b2 = " << num(d.b2) << '\n';
  os << "b = " << num(d.b) << '\n';
  os << "rho = " << (d.rho ? num(*d.rho) : "undefined") << '\n';
  os << "varphi = " << (d.varphi ? num(*d.varphi) : "undefined") << '\n';
  os << "step = " << num(sc.step) << '\n';
  os << "mode = " << (d.unchecked ? "unchecked" : "checked") << '\n';

  bool eta_ok = true;
  for (double e : d.eta_i) eta_ok = eta_ok && e > 0.0 && e <= d.eta;
  os << "check strongly_connected: PASS\n";
  os << "check g_i >= r_i: " << flag(d.g_dominates_r) << '\n';
  os << "check 0 < lambda < lambda2_hat/N: " << flag(d.lambda_in_range) << " (" << num(d.lambda) << " vs "
     << num(s.lambda2_hat / nd) << ")\n";
  os << "check eta >= eta_i > 0: " << flag(eta_ok) << '\n';
  os << "check varphi < 1: " << flag(d.varphi_below_one) << " ("
     << (d.varphi ? num(*d.varphi) : std::string("undefined")) << ")\n";
  os << "check step <= b/4: " << flag(sc.step <= d.b / 4.0) << " (" << num(sc.step) << " vs " << num(d.b / 4.0)
     << ")\n";
  for (std::size_t i = 0; i < sc.agents(); ++i) {
    const auto& p = sc.plants[i];
    if (!p) continue;
    for (std::size_t j = 1; j <= p->relative_degree(); ++j) {
      const auto& blk = p->generator().blocks[j - 1];
      os << "agent" << i + 1 << ".model = " << p->model().name() << '\n';
      os << "agent" << i + 1 << ".T_" << j << " = " << matrix_str(blk.T) << '\n';
      os << "agent" << i + 1 << ".sylvester_residual_" << j << " = " << num(blk.sylvester_residual) << '\n';
    }
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Event-triggered output synchronization simulator"};
  app.require_subcommand(1);
  CommonOptions opt;

  auto* design = app.add_subcommand("design", "Compute and report the design constants");
  std::string design_config;
  design->add_option("config", design_config, "Scenario file")->required();
  add_common(design, opt);

  auto* run_cmd = app.add_subcommand("run", "Simulate scenarios and write results");
  std::vector<std::string> run_configs;
  std::string out_dir;
  run_cmd->add_option("config", run_configs, "Scenario file(s)")->required();
  run_cmd->add_option("-o,--output", out_dir, "Output directory")->required();
  add_common(run_cmd, opt);
  run_cmd->add_option("--jobs", opt.jobs, "Scenarios to run concurrently")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "Check trajectory invariants of a run directory or a scenario");
  std::vector<std::string> verify_inputs;
  verify->add_option("input", verify_inputs, "Run directory or scenario file(s)")->required();
  add_common(verify, opt);
  verify->add_option("--jobs", opt.jobs, "Inputs to verify concurrently")->check(CLI::PositiveNumber);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kUsage;
  }

  const ScenarioOverrides ov = opt.overrides();

  if (*design) {
    return for_each_job({design_config}, 1, out, err, [&](std::size_t, std::ostream& o, std::ostream&) {
      print_design_report(o, load_scenario(design_config, ov));
      return kOk;
    });
  }

  if (*run_cmd) {
    return for_each_job(run_configs, opt.jobs, out, err, [&](std::size_t k, std::ostream& o, std::ostream&) {
      const std::string& path = run_configs[k];
      const std::string text = read_text_file(path);
      const Scenario sc = parse_config(text, ov);
      const SimResult res = run_scenario(sc);
      fs::path dir = out_dir;
      if (run_configs.size() > 1) dir /= fs::path(path).stem();
      io::write_run(dir, res, sc, text, ov);
      o << "wrote " << dir.string() << " (" << res.trace.rows.size() << " samples, " << res.log.events.size()
        << " events)\n";
      return kOk;
    });
  }

  return for_each_job(verify_inputs, opt.jobs, out, err, [&](std::size_t k, std::ostream& o, std::ostream&) {
    const std::string& input = verify_inputs[k];
    if (fs::is_directory(input)) {
      const auto loaded = io::load_run(input);
      return print_report(o, input, verify_run(loaded.scenario, loaded.trace, loaded.log));
    }
    const Scenario sc = load_scenario(input, ov);
    const SimResult res = run_scenario(sc);
    return print_report(o, input, verify_run(sc, res.trace, res.log));
  });
}

}  // namespace etsync::cli
