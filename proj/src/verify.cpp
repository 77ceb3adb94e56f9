#include "etsync/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace etsync {

std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "PASS";
    case CheckStatus::Fail: return "FAIL";
    case CheckStatus::NotApplicable: return "N/A";
  }
  return "?";
}

bool VerifyReport::passed() const {
  return std::none_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.status == CheckStatus::Fail; });
}

const CheckResult* VerifyReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

double norm_of(const std::vector<double>& row, const std::vector<std::size_t>& cols) {
  double s = 0.0;
  for (std::size_t c : cols) s += row[c] * row[c];
  return std::sqrt(s);
}

std::string agent_label(std::size_t i) { return "agent " + std::to_string(i + 1); }

class Verifier {
 public:
  Verifier(const Scenario& sc, const SimTrace& trace, const EventLog& log, const VerifyTolerances& tol)
      : sc_(sc), tr_(trace), log_(log), tol_(tol), n_(sc.agents()), q_(sc.model.dim()) {
    const std::size_t ct = tr_.column("t");
    for (const auto& r : tr_.rows) times_.push_back(r[ct]);
    for (std::size_t i = 0; i < n_; ++i) {
      const std::string id = std::to_string(i + 1);
      std::vector<std::size_t> p, e;
      for (std::size_t a = 1; a <= q_; ++a) {
        p.push_back(tr_.column("p" + id + "_" + std::to_string(a)));
        e.push_back(tr_.column("eps" + id + "_" + std::to_string(a)));
      }
      p_cols_.push_back(std::move(p));
      eps_cols_.push_back(std::move(e));
    }
  }

  VerifyReport run() {
    VerifyReport rep;
    rep.checks.push_back(dwell_time());
    rep.checks.push_back(inter_event_error_bound());
    rep.checks.push_back(combined_condition());
    rep.checks.push_back(lyapunov_decrease());
    rep.checks.push_back(consensus());
    rep.checks.push_back(trigger_safety());
    rep.checks.push_back(zeno());
    rep.checks.push_back(sync_error());
    rep.checks.push_back(iss_peak_decay());
    return rep;
  }

 private:
  std::vector<double> event_times(std::size_t agent, EventFamily fam) const {
    std::vector<double> t;
    for (const auto& e : log_.events)
      if (e.agent == agent && e.family == fam) t.push_back(e.t);
    return t;
  }

  CheckResult dwell_time() const {
    CheckResult r{"dwell_time", CheckStatus::Pass, ""};
    const double b = sc_.design.b;
    double worst = std::numeric_limits<double>::infinity();
    std::size_t count = 0;
    std::vector<double> last(n_, -std::numeric_limits<double>::infinity());
    for (const auto& e : log_.events) {
      if (e.family != EventFamily::Consensus) continue;
      if (e.t <= last[e.agent] && e.k > 0) {
        r.status = CheckStatus::Fail;
        r.detail = agent_label(e.agent) + " event times not increasing at t=" + std::to_string(e.t);
        return r;
      }
      last[e.agent] = e.t;
      if (e.k == 0) continue;
      ++count;
      worst = std::min(worst, e.dt);
      if (!(e.dt >= b)) {
        r.status = CheckStatus::Fail;
        std::ostringstream os;
        os.precision(17);
        os << agent_label(e.agent) << " interval " << e.dt << " < b = " << b << " at t=" << e.t;
        r.detail = os.str();
        return r;
      }
    }
    std::ostringstream os;
    os.precision(10);
    os << count << " intervals, min " << (count ? worst : 0.0) << " >= b = " << b;
    r.detail = os.str();
    return r;
  }

  CheckResult inter_event_error_bound() const {
    CheckResult r{"inter_event_error_bound", CheckStatus::Pass, ""};
    std::size_t checked = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& w : log_.windows) {
      const double end = w.t_start + std::min(w.tau, w.t_end - w.t_start);
      auto it = std::lower_bound(times_.begin(), times_.end(), w.t_start);
      for (; it != times_.end() && *it < end; ++it) {
        const auto& row = tr_.rows[static_cast<std::size_t>(it - times_.begin())];
        const double eps = norm_of(row, eps_cols_[w.agent]);
        const double bound = sc_.design.eta_i[w.agent] * norm_of(row, p_cols_[w.agent]);
        ++checked;
        worst = std::max(worst, eps - bound);
        if (eps > bound + tol_.error_bound_slack * (1.0 + bound)) {
          r.status = CheckStatus::Fail;
          std::ostringstream os;
          os.precision(10);
          os << agent_label(w.agent) << " at t=" << *it << ": |eps|=" << eps << " > eta_i |p_i| = " << bound;
          r.detail = os.str();
          return r;
        }
      }
    }
    std::ostringstream os;
    os.precision(6);
    os << checked << " samples inside [t_k, t_k + tau_k) windows; max |eps_i| - eta_i |p_i| = "
       << (checked ? worst : 0.0);
    r.detail = os.str();
    return r;
  }

  // Per-sample: every agent satisfies |eps_i| <= max(eta_i |p_i|, phi |p|).
  std::vector<bool> combined_holds() const {
    std::vector<bool> holds(tr_.rows.size(), true);
    for (std::size_t k = 0; k < tr_.rows.size(); ++k) {
      const auto& row = tr_.rows[k];
      double p_sq = 0.0;
      for (std::size_t i = 0; i < n_; ++i) p_sq += std::pow(norm_of(row, p_cols_[i]), 2);
      const double p = std::sqrt(p_sq);
      for (std::size_t i = 0; i < n_ && holds[k]; ++i) {
        const double eps = norm_of(row, eps_cols_[i]);
        holds[k] = eps <= std::max(sc_.design.eta_i[i] * norm_of(row, p_cols_[i]), sc_.design.phi * p);
      }
    }
    return holds;
  }

  CheckResult combined_condition() const {
    CheckResult r{"combined_condition", CheckStatus::Pass, ""};
    const auto holds = combined_holds();
    const double nd = static_cast<double>(n_);
    const double factor = sc_.design.eta * sc_.design.eta + nd * sc_.design.phi * sc_.design.phi;
    std::size_t count = 0;
    for (std::size_t k = 0; k < tr_.rows.size(); ++k) {
      if (!holds[k]) continue;
      ++count;
      const auto& row = tr_.rows[k];
      double p_sq = 0.0;
      double eps_sq = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        p_sq += std::pow(norm_of(row, p_cols_[i]), 2);
        eps_sq += std::pow(norm_of(row, eps_cols_[i]), 2);
      }
      if (eps_sq > factor * p_sq + tol_.combined_slack * (1.0 + p_sq)) {
        r.status = CheckStatus::Fail;
        std::ostringstream os;
        os.precision(10);
        os << "t=" << times_[k] << ": |eps|^2=" << eps_sq << " > (eta^2 + N phi^2)|p|^2 = " << factor * p_sq;
        r.detail = os.str();
        return r;
      }
    }
    r.detail = std::to_string(count) + " of " + std::to_string(tr_.rows.size()) + " samples satisfy the per-agent condition";
    return r;
  }

  CheckResult lyapunov_decrease() const {
    CheckResult r{"lyapunov_decrease", CheckStatus::Pass, ""};
    if (!sc_.design.varphi || !(*sc_.design.varphi < 1.0)) {
      r.status = CheckStatus::NotApplicable;
      r.detail = sc_.design.varphi ? "varphi >= 1" : "rho undefined (lambda >= lambda2_hat / N)";
      return r;
    }
    const double vphi = *sc_.design.varphi;
    const auto holds = combined_holds();
    const std::size_t cv = tr_.column("V");
    const std::size_t cp = tr_.column("p_norm");
    std::size_t pairs = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < tr_.rows.size(); ++k) {
      if (!holds[k] || !holds[k + 1]) continue;
      const auto& a = tr_.rows[k];
      const auto& b = tr_.rows[k + 1];
      const double dt = times_[k + 1] - times_[k];
      if (!(dt > 0.0)) continue;
      const double slope = (b[cv] - a[cv]) / dt;
      const double p_lo = std::min(a[cp], b[cp]);
      const double p_hi = std::max(a[cp], b[cp]);
      const double limit = -0.5 * (1.0 - vphi) * p_lo * p_lo + tol_.v_decrease_slack * p_hi * p_hi;
      ++pairs;
      worst = std::max(worst, slope - limit);
      if (slope > limit) {
        r.status = CheckStatus::Fail;
        std::ostringstream os;
        os.precision(10);
        os << "t=" << times_[k] << ": dV/dt=" << slope << " > " << limit;
        r.detail = os.str();
        return r;
      }
    }
    std::ostringstream os;
    os.precision(6);
    os << pairs << " sample pairs, varphi=" << vphi << ", max slope - limit = " << (pairs ? worst : 0.0);
    r.detail = os.str();
    return r;
  }

  CheckResult consensus() const {
    CheckResult r{"consensus", CheckStatus::Pass, ""};
    if (tr_.rows.empty()) {
      r.status = CheckStatus::NotApplicable;
      return r;
    }
    const std::size_t cp = tr_.column("p_norm");
    const double p0 = tr_.rows.front()[cp];
    const double pT = tr_.rows.back()[cp];
    std::ostringstream os;
    os.precision(6);
    os << "|p(T)| = " << pT << ", |p(0)| = " << p0;
    if (pT > tol_.consensus_ratio * p0) {
      r.status = CheckStatus::Fail;
      os << ", ratio above " << tol_.consensus_ratio;
    }
    r.detail = os.str();
    return r;
  }

  CheckResult trigger_safety() const {
    CheckResult r{"trigger_safety", CheckStatus::Pass, ""};
    if (!sc_.has_plants()) {
      r.status = CheckStatus::NotApplicable;
      r.detail = "no regulation plants";
      return r;
    }
    std::size_t checked = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) {
      const auto& plant = sc_.plants[i];
      if (!plant) continue;
      const std::string id = std::to_string(i + 1);
      std::vector<std::size_t> xbar_cols;
      for (std::size_t a = 1; a <= plant->relative_degree(); ++a) xbar_cols.push_back(tr_.column("xbar" + id + "_" + std::to_string(a)));
      const std::size_t cu = tr_.column("uheld" + id);
      const std::size_t cw = tr_.column("varpi" + id);
      const std::size_t cq = tr_.column("q" + id);
      const auto ev = event_times(i, EventFamily::Regulation);
      std::vector<double> xb(xbar_cols.size());
      for (std::size_t k = 0; k < tr_.rows.size(); ++k) {
        const auto& row = tr_.rows[k];
        for (std::size_t a = 0; a < xb.size(); ++a) xb[a] = row[xbar_cols[a]];
        const double varpi = row[cu] - plant->kappa().value(xb);
        if (std::abs(varpi - row[cw]) > tol_.varpi_consistency * (1.0 + std::abs(row[cu]))) {
          r.status = CheckStatus::Fail;
          std::ostringstream os;
          os.precision(17);
          os << agent_label(i) << " at t=" << times_[k] << ": held input " << row[cu] << " inconsistent with varpi "
             << row[cw];
          r.detail = os.str();
          return r;
        }
        if (std::binary_search(ev.begin(), ev.end(), times_[k])) continue;
        ++checked;
        const double excess = std::abs(varpi) - plant->sigma()(std::abs(row[cq]));
        worst = std::max(worst, excess);
        if (excess > tol_.trigger_safety_slack) {
          r.status = CheckStatus::Fail;
          std::ostringstream os;
          os.precision(10);
          os << agent_label(i) << " at t=" << times_[k] << ": |varpi| - sigma(|q|) = " << excess;
          r.detail = os.str();
          return r;
        }
      }
    }
    std::ostringstream os;
    os.precision(6);
    os << checked << " interior samples, max |varpi| - sigma(|q|) = " << (checked ? worst : 0.0);
    r.detail = os.str();
    return r;
  }

  CheckResult zeno() const {
    CheckResult r{"zeno", CheckStatus::Pass, ""};
    const double floor = tol_.event_resolution * (1.0 + sc_.horizon);
    std::ostringstream os;
    os.precision(6);
    bool any = false;
    for (EventFamily fam : {EventFamily::Consensus, EventFamily::Regulation}) {
      double min_dt = std::numeric_limits<double>::infinity();
      std::size_t max_unit = 0;
      std::size_t total = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        const auto t = event_times(i, fam);
        if (t.size() > kZenoGuardEvents + 1) {
          r.status = CheckStatus::Fail;
          r.detail = agent_label(i) + " exceeded the event guard";
          return r;
        }
        for (std::size_t k = 1; k < t.size(); ++k) {
          const double dt = t[k] - t[k - 1];
          min_dt = std::min(min_dt, dt);
          if (!(dt > floor)) {
            r.status = CheckStatus::Fail;
            std::ostringstream f;
            f.precision(17);
            f << agent_label(i) << " " << to_string(fam) << " interval " << dt << " at t=" << t[k]
              << " not above resolution floor " << floor;
            r.detail = f.str();
            return r;
          }
        }
        for (std::size_t lo = 0, hi = 0; lo < t.size(); ++lo) {
          while (hi < t.size() && t[hi] < t[lo] + 1.0) ++hi;
          max_unit = std::max(max_unit, hi - lo);
        }
        total += t.size();
      }
      if (total == 0) continue;
      os << (any ? "; " : "") << to_string(fam) << ": min interval " << (std::isfinite(min_dt) ? min_dt : 0.0)
         << ", max events per unit time " << max_unit;
      any = true;
    }
    r.detail = os.str();
    return r;
  }

  CheckResult sync_error() const {
    CheckResult r{"sync_error", CheckStatus::Pass, ""};
    const auto cs = tr_.find("sync_error");
    if (!cs || tr_.rows.empty() || sc_.horizon <= 0.0) {
      r.status = CheckStatus::NotApplicable;
      r.detail = cs ? "empty horizon" : "no regulation plants";
      return r;
    }
    double tail = 0.0;
    for (std::size_t k = 0; k < tr_.rows.size(); ++k)
      if (times_[k] >= 0.9 * sc_.horizon) tail = std::max(tail, tr_.rows[k][*cs]);
    std::ostringstream os;
    os.precision(6);
    os << "max over final 10% = " << tail << " (limit " << tol_.sync_error_tail << ")";
    r.detail = os.str();
    if (!(tail <= tol_.sync_error_tail)) r.status = CheckStatus::Fail;
    return r;
  }

  CheckResult iss_peak_decay() const {
    CheckResult r{"iss_peak_decay", CheckStatus::NotApplicable, ""};
    std::ostringstream os;
    os.precision(4);
    if (!sc_.has_plants() || tr_.rows.empty()) {
      r.detail = "no regulation plants";
      return r;
    }
    const double T = times_.back();
    for (std::size_t i = 0; i < n_; ++i) {
      if (!sc_.plants[i]) continue;
      const std::string id = std::to_string(i + 1);
      const std::size_t cm = tr_.column("mu" + id);
      const std::size_t ce = tr_.column("e" + id);
      std::size_t start = tr_.rows.size();
      while (start > 0 && std::abs(tr_.rows[start - 1][cm]) < tol_.iss_mu_threshold) --start;
      os << (os.tellp() > 0 ? "; " : "") << agent_label(i) << ":";
      if (start == tr_.rows.size()) {
        os << " |mu| never settles below threshold";
        continue;
      }
      const double t_star = times_[start];
      std::vector<double> peaks;
      for (double w0 = t_star; w0 + tol_.iss_window <= T + 1e-9; w0 += tol_.iss_window) {
        double pk = 0.0;
        for (std::size_t k = start; k < tr_.rows.size(); ++k)
          if (times_[k] >= w0 && times_[k] < w0 + tol_.iss_window) pk = std::max(pk, std::abs(tr_.rows[k][ce]));
        peaks.push_back(pk);
      }
      os << " from t=" << t_star << " peaks";
      for (double p : peaks) os << " " << p;
      for (std::size_t k = 1; k < peaks.size(); ++k) {
        if (peaks[k] <= tol_.iss_peak_floor && peaks[k - 1] <= tol_.iss_peak_floor) continue;
        if (r.status == CheckStatus::NotApplicable) r.status = CheckStatus::Pass;
        if (peaks[k] > peaks[k - 1]) r.status = CheckStatus::Fail;
      }
    }
    r.detail = os.str();
    return r;
  }

  const Scenario& sc_;
  const SimTrace& tr_;
  const EventLog& log_;
  VerifyTolerances tol_;
  std::size_t n_;
  std::size_t q_;
  std::vector<double> times_;
  std::vector<std::vector<std::size_t>> p_cols_;
  std::vector<std::vector<std::size_t>> eps_cols_;
};

}  // namespace

VerifyReport verify_run(const Scenario& scenario, const SimTrace& trace, const EventLog& log,
                        const VerifyTolerances& tol) {
  return Verifier(scenario, trace, log, tol).run();
}

}  // namespace etsync
