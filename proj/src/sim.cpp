#include "etsync/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "etsync/errors.hpp"

namespace etsync {

bool Scenario::has_plants() const {
  return std::any_of(plants.begin(), plants.end(), [](const auto& p) { return p.has_value(); });
}

void Scenario::validate() const {
  const std::size_t n = agents();
  const std::size_t q = model.dim();
  if (!(step > 0.0)) throw Error(ErrorKind::ValidationError, "sim step h must be positive");
  if (!(horizon >= 0.0) || (horizon > 0.0 && horizon < step)) {
    throw Error(ErrorKind::ValidationError, "sim horizon must be zero or at least one step");
  }
  if (step > design.b / 4.0) {
    std::ostringstream os;
    os.precision(17);
    os << "sim step h must resolve the dwell time with four steps: h=" << step << " > b/4=" << design.b / 4.0;
    throw Error(ErrorKind::ValidationError, os.str());
  }
  if (plants.size() != n || initial.size() != n) {
    throw Error(ErrorKind::ValidationError, "scenario needs plant and initial-state entries for every agent");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ic = initial[i];
    const std::string who = "agent " + std::to_string(i + 1);
    if (ic.v.size() != q) throw Error(ErrorKind::ValidationError, who + ": v0 must have " + std::to_string(q) + " entries");
    if (plants[i]) {
      const auto& p = *plants[i];
      const std::size_t eta_dim = p.state_dim() - p.z_dim() - p.relative_degree();
      if (ic.z.size() != p.z_dim()) throw Error(ErrorKind::ValidationError, who + ": z0 has wrong length");
      if (ic.x.size() != p.relative_degree()) throw Error(ErrorKind::ValidationError, who + ": x0 has wrong length");
      if (ic.eta.size() != eta_dim) throw Error(ErrorKind::ValidationError, who + ": eta0 has wrong length");
    }
  }
}

std::string_view to_string(EventFamily f) { return f == EventFamily::Consensus ? "consensus" : "regulation"; }

std::optional<std::size_t> SimTrace::find(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns.begin());
}

std::size_t SimTrace::column(const std::string& name) const {
  if (auto c = find(name)) return *c;
  throw Error(ErrorKind::ValidationError, "trace has no column '" + name + "'");
}

double locate_crossing(const std::function<double(double)>& g, double lo, double hi, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

namespace {

struct AgentSignals {
  std::vector<double> x_bar;
  std::vector<double> x_bar_dot;
  double e = 0.0;
  double varpi = 0.0;
  double q = 0.0;
  TriggerValue trigger;
};

class Simulator {
 public:
  explicit Simulator(const Scenario& sc) : sc_(sc), plants_(sc.plants) {
    sc_.validate();
    n_ = sc_.agents();
    q_ = sc_.model.dim();
    layout_ = make_layout(q_, plants_);
    dyn_.model = &sc_.model;
    dyn_.plants = &plants_;
    dyn_.layout = &layout_;
    dyn_.mu.assign(n_, 0.0);

    x_.assign(layout_.total, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto& ic = sc_.initial[i];
      std::copy(ic.v.begin(), ic.v.end(), x_.begin() + static_cast<long>(layout_.offsets[i]));
      if (plants_[i]) {
        auto it = x_.begin() + static_cast<long>(layout_.plant_offset(i));
        it = std::copy(ic.z.begin(), ic.z.end(), it);
        it = std::copy(ic.x.begin(), ic.x.end(), it);
        std::copy(ic.eta.begin(), ic.eta.end(), it);
      }
    }
    for (std::size_t i = 0; i < n_; ++i) triggers_.push_back(make_trigger_state(i, n_, q_));
    next_trigger_.assign(n_, 0.0);
    p_held_.assign(n_, std::vector<double>(q_, 0.0));
    cons_count_.assign(n_, 0);
    reg_count_.assign(n_, 0);
    out_neighbors_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) out_neighbors_[i] = sc_.graph.out_neighbors(i);
    build_columns();
  }

  SimResult run() {
    double t = 0.0;
    process_consensus(t, /*initial=*/true);
    for (std::size_t i = 0; i < n_; ++i)
      if (plants_[i]) regulation_event(i, t, signals(i, x_).x_bar);
    log_sample(t);

    const double h = sc_.step;
    const std::size_t n_grid =
        sc_.horizon > 0.0 ? static_cast<std::size_t>(std::ceil(sc_.horizon / h - 1e-9)) : 0;
    auto grid_time = [&](std::size_t k) { return k >= n_grid ? sc_.horizon : static_cast<double>(k) * h; };

    std::vector<double> x_next(layout_.total);
    std::vector<double> x_probe(layout_.total);
    std::size_t k_grid = 0;
    while (k_grid < n_grid) {
      const double t_grid = grid_time(k_grid + 1);
      const double t_cons = *std::min_element(next_trigger_.begin(), next_trigger_.end());
      const double t_target = std::min(t_grid, t_cons);

      if (t_target > t) {
        rk4_step(dyn_, x_, t_target - t, x_next, ws_, sc_.kernel);

        double best = std::numeric_limits<double>::infinity();
        std::size_t who = n_;
        for (std::size_t i = 0; i < n_; ++i) {
          if (!plants_[i] || !fires(signals(i, x_next).trigger)) continue;
          auto g = [&](double s) {
            rk4_step(dyn_, x_, s - t, x_probe, ws_, sc_.kernel);
            const auto tv = signals(i, x_probe).trigger;
            return tv.exempt ? -1.0 : tv.value;
          };
          const double tc = locate_crossing(g, t, t_target, 1e-10 * (1.0 + t));
          if (tc < best) {
            best = tc;
            who = i;
          }
        }

        if (who < n_ && best < t_target) {
          rk4_step(dyn_, x_, best - t, x_probe, ws_, sc_.kernel);
          x_.swap(x_probe);
          t = best;
          fire_pending_regulation(t);
          continue;
        }
        x_.swap(x_next);
        t = t_target;
      }

      if (t >= t_cons) process_consensus(t, /*initial=*/false);
      fire_pending_regulation(t);
      if (t >= t_grid) {
        log_sample(t);
        ++k_grid;
      }
    }
    close_windows(t);

    SimResult out;
    out.metrics = compute_metrics(trace_, log_, n_, sc_.horizon);
    out.trace = std::move(trace_);
    out.log = std::move(log_);
    return out;
  }

 private:
  static bool fires(const TriggerValue& tv) { return !tv.exempt && tv.value > 0.0; }

  std::vector<double> stacked_v(std::span<const double> x) const {
    std::vector<double> v(n_ * q_);
    for (std::size_t i = 0; i < n_; ++i)
      std::copy_n(x.begin() + static_cast<long>(layout_.offsets[i]), q_, v.begin() + static_cast<long>(i * q_));
    return v;
  }

  AgentSignals signals(std::size_t i, std::span<const double> x) const {
    AgentSignals s;
    const auto& plant = *plants_[i];
    const auto v = x.subspan(layout_.offsets[i], q_);
    std::vector<double> vdot(q_);
    for (std::size_t a = 0; a < q_; ++a) {
      double acc = sc_.model.B(a, 0) * dyn_.mu[i];
      for (std::size_t c = 0; c < q_; ++c) acc += sc_.model.A(a, c) * v[c];
      vdot[a] = acc;
    }
    const auto ps = x.subspan(layout_.plant_offset(i), layout_.plant_dims[i]);
    std::vector<double> dps(ps.size());
    closed_loop_derivative(plant, ps, dps);

    const std::size_t m = plant.z_dim();
    s.e = tracking_error(ps[m], v, plant.model());
    const auto grad_c = plant.model().output_gradient(v);
    double e_dot = dps[m];
    for (std::size_t a = 0; a < q_; ++a) e_dot -= grad_c[a] * vdot[a];
    s.x_bar = sensor_bar_x(plant, ps, s.e);
    s.x_bar_dot = sensor_bar_x_dot(plant, dps, e_dot);
    const VarpiQ vq = varpi_and_q(plant, s.x_bar, s.x_bar_dot);
    s.varpi = vq.varpi;
    s.q = vq.q;
    s.trigger = regulation_trigger_value(plant, s.x_bar, s.x_bar_dot);
    return s;
  }

  void bump(std::vector<std::size_t>& counts, std::size_t i, EventFamily f) {
    if (++counts[i] > kZenoGuardEvents) {
      throw Error(ErrorKind::ZenoGuardTripped, "agent " + std::to_string(i + 1) + " exceeded " +
                                                   std::to_string(kZenoGuardEvents) + " " +
                                                   std::string(to_string(f)) + " events");
    }
  }

  void regulation_event(std::size_t i, double t, std::span<const double> x_bar) {
    auto& plant = *plants_[i];
    const bool first = plant.k == 0;
    const double dt = first ? std::numeric_limits<double>::quiet_NaN() : t - plant.t_last;
    on_regulation_event(plant, t, x_bar);
    log_.events.push_back({i, EventFamily::Regulation, plant.k - 1, t, dt});
    if (!first) bump(reg_count_, i, EventFamily::Regulation);
  }

  void fire_pending_regulation(double t) {
    for (std::size_t i = 0; i < n_; ++i) {
      if (!plants_[i]) continue;
      const auto s = signals(i, x_);
      if (fires(s.trigger)) regulation_event(i, t, s.x_bar);
    }
  }

  void process_consensus(double t, bool initial) {
    const double norm_A = sc_.design.norm_A;
    for (;;) {
      std::vector<std::size_t> due;
      for (std::size_t i = 0; i < n_; ++i)
        if (initial ? triggers_[i].k == 0 : next_trigger_[i] <= t) due.push_back(i);
      if (due.empty()) break;
      const auto v_all = stacked_v(x_);
      for (std::size_t i : due) {
        auto& st = triggers_[i];
        double dt = std::numeric_limits<double>::quiet_NaN();
        if (st.k > 0) {
          accrue_integral(st, t, norm_A);
          log_.windows.push_back({i, st.k - 1, st.t_last, t, provisional_tau(st, norm_A), true});
          dt = t - st.t_last;
          bump(cons_count_, i, EventFamily::Consensus);
        }
        // Broadcasts from lower-indexed agents at this instant are already in.
        const auto p_now = relative_measurement(v_all, q_, sc_.graph, i);
        on_own_event(st, t, p_now, sc_.design, sc_.model, sc_.graph);
        p_held_[i] = p_now;
        dyn_.mu[i] = consensus_control(sc_.design, i, p_now);
        log_.events.push_back({i, EventFamily::Consensus, st.k - 1, t, dt});
        for (std::size_t j : out_neighbors_[i]) on_neighbor_broadcast(triggers_[j], t, i, p_now, sc_.design, sc_.graph);
      }
      for (std::size_t i = 0; i < n_; ++i) next_trigger_[i] = next_consensus_trigger(triggers_[i], sc_.design, norm_A);
      initial = false;
    }
  }

  void close_windows(double t) {
    const double norm_A = sc_.design.norm_A;
    for (std::size_t i = 0; i < n_; ++i) {
      auto st = triggers_[i];
      accrue_integral(st, t, norm_A);
      log_.windows.push_back({i, st.k - 1, st.t_last, t, provisional_tau(st, norm_A), false});
    }
  }

  void build_columns() {
    auto& c = trace_.columns;
    c.push_back("t");
    for (std::size_t i = 0; i < n_; ++i) {
      const std::string id = std::to_string(i + 1);
      for (std::size_t a = 1; a <= q_; ++a) c.push_back("v" + id + "_" + std::to_string(a));
      if (plants_[i]) {
        const auto& p = *plants_[i];
        for (std::size_t a = 1; a <= p.z_dim(); ++a) c.push_back("z" + id + "_" + std::to_string(a));
        for (std::size_t a = 1; a <= p.relative_degree(); ++a) c.push_back("x" + id + "_" + std::to_string(a));
        for (std::size_t j = 1; j <= p.relative_degree(); ++j)
          for (std::size_t a = 1; a <= p.generator().blocks[j - 1].dim(); ++a)
            c.push_back("eta" + id + "_" + std::to_string(j) + "_" + std::to_string(a));
      }
      for (std::size_t a = 1; a <= q_; ++a) c.push_back("p" + id + "_" + std::to_string(a));
      for (std::size_t a = 1; a <= q_; ++a) c.push_back("eps" + id + "_" + std::to_string(a));
      c.push_back("mu" + id);
      if (plants_[i]) {
        c.push_back("y" + id);
        c.push_back("e" + id);
        for (std::size_t a = 1; a <= plants_[i]->relative_degree(); ++a)
          c.push_back("xbar" + id + "_" + std::to_string(a));
        c.push_back("uheld" + id);
        c.push_back("varpi" + id);
        c.push_back("q" + id);
      }
    }
    if (sc_.has_plants()) {
      c.push_back("y_inf");
      c.push_back("sync_error");
    }
    c.push_back("p_norm");
    c.push_back("eps_norm");
    c.push_back("V");
  }

  void log_sample(double t) {
    std::vector<double> row;
    row.reserve(trace_.columns.size());
    row.push_back(t);
    const auto v_all = stacked_v(x_);
    std::vector<double> p_all(n_ * q_);
    double p_sq = 0.0;
    double eps_sq = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const auto off = static_cast<long>(layout_.offsets[i]);
      row.insert(row.end(), x_.begin() + off, x_.begin() + off + static_cast<long>(q_));
      std::optional<AgentSignals> s;
      if (plants_[i]) {
        const auto po = static_cast<long>(layout_.plant_offset(i));
        row.insert(row.end(), x_.begin() + po, x_.begin() + po + static_cast<long>(layout_.plant_dims[i]));
      }
      const auto p = relative_measurement(v_all, q_, sc_.graph, i);
      std::copy(p.begin(), p.end(), p_all.begin() + static_cast<long>(i * q_));
      row.insert(row.end(), p.begin(), p.end());
      for (std::size_t a = 0; a < q_; ++a) {
        const double eps = p_held_[i][a] - p[a];
        row.push_back(eps);
        eps_sq += eps * eps;
        p_sq += p[a] * p[a];
      }
      row.push_back(dyn_.mu[i]);
      if (plants_[i]) {
        s = signals(i, x_);
        const std::size_t m = plants_[i]->z_dim();
        row.push_back(x_[layout_.plant_offset(i) + m]);
        row.push_back(s->e);
        row.insert(row.end(), s->x_bar.begin(), s->x_bar.end());
        row.push_back(plants_[i]->u_bar_held);
        row.push_back(s->varpi);
        row.push_back(s->q);
      }
    }
    if (sc_.has_plants()) {
      std::vector<double> v_inf(q_, 0.0);
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t a = 0; a < q_; ++a) v_inf[a] += sc_.spectra.r[i] * v_all[i * q_ + a];
      const AgentModel* ref = nullptr;
      for (const auto& p : plants_)
        if (p) {
          ref = &p->model();
          break;
        }
      const double y_inf = ref->output(v_inf);
      double err = 0.0;
      for (std::size_t i = 0; i < n_; ++i)
        if (plants_[i]) err = std::max(err, std::abs(x_[layout_.plant_offset(i) + plants_[i]->z_dim()] - y_inf));
      row.push_back(y_inf);
      row.push_back(err);
    }
    row.push_back(std::sqrt(p_sq));
    row.push_back(std::sqrt(eps_sq));
    row.push_back(lyapunov_V(p_all, sc_.design, sc_.spectra));
    trace_.rows.push_back(std::move(row));
  }

  const Scenario& sc_;
  std::size_t n_ = 0;
  std::size_t q_ = 0;
  std::vector<std::optional<RegulationPlant>> plants_;
  NetworkLayout layout_;
  NetworkDynamics dyn_;
  std::vector<double> x_;
  Rk4Workspace ws_;
  std::vector<AgentTriggerState> triggers_;
  std::vector<double> next_trigger_;
  std::vector<std::vector<double>> p_held_;
  std::vector<std::size_t> cons_count_;
  std::vector<std::size_t> reg_count_;
  std::vector<std::vector<std::size_t>> out_neighbors_;
  EventLog log_;
  SimTrace trace_;
};

}  // namespace

SimResult run_scenario(const Scenario& scenario) { return Simulator(scenario).run(); }

Metrics compute_metrics(const SimTrace& trace, const EventLog& log, std::size_t agents, double horizon) {
  Metrics m;
  m.samples = trace.rows.size();
  if (trace.rows.empty()) return m;
  const std::size_t ct = trace.column("t");
  const std::size_t cp = trace.column("p_norm");
  const std::size_t cv = trace.column("V");
  m.p_norm_initial = trace.rows.front()[cp];
  m.p_norm_final = trace.rows.back()[cp];
  if (auto cs = trace.find("sync_error")) {
    m.sync_error_final = trace.rows.back()[*cs];
    double tail = 0.0;
    for (const auto& row : trace.rows)
      if (row[ct] >= 0.9 * horizon) tail = std::max(tail, row[*cs]);
    m.sync_error_tail_max = tail;
  }
  for (std::size_t k = 1; k < trace.rows.size(); ++k)
    if (trace.rows[k][cv] > trace.rows[k - 1][cv]) ++m.v_increase_count;

  auto stats = [&](std::size_t agent, EventFamily fam) -> std::optional<FamilyStats> {
    FamilyStats s;
    bool any = false;
    double total = 0.0;
    std::vector<double> times;
    s.min_interval = std::numeric_limits<double>::infinity();
    for (const auto& e : log.events) {
      if (e.agent != agent || e.family != fam) continue;
      any = true;
      times.push_back(e.t);
      if (e.k == 0) continue;
      ++s.count;
      total += e.dt;
      s.min_interval = std::min(s.min_interval, e.dt);
    }
    if (!any) return std::nullopt;
    std::sort(times.begin(), times.end());
    for (std::size_t lo = 0, hi = 0; lo < times.size(); ++lo) {
      while (hi < times.size() && times[hi] < times[lo] + 1.0) ++hi;
      s.max_per_unit_time = std::max(s.max_per_unit_time, hi - lo);
    }
    s.mean_interval = s.count ? total / static_cast<double>(s.count) : std::numeric_limits<double>::quiet_NaN();
    if (!s.count) s.min_interval = std::numeric_limits<double>::quiet_NaN();
    return s;
  };
  for (std::size_t i = 0; i < agents; ++i) {
    m.consensus.push_back(stats(i, EventFamily::Consensus).value_or(FamilyStats{}));
    m.regulation.push_back(stats(i, EventFamily::Regulation));
  }
  return m;
}

}  // namespace etsync
