#include "lobscale/som_slow.hpp"

#include <algorithm>
#include <cmath>

#include "lobscale/parallel.hpp"

namespace lob {

namespace {

std::vector<double> central_diff_row(const std::vector<double>& v, double tick) {
  const size_t n = v.size();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) {
    double up = i + 1 < n ? v[i + 1] : 0.0;
    double dn = i >= 1 ? v[i - 1] : 0.0;
    out[i] = (up - dn) / (2.0 * tick);
  }
  return out;
}

// tick * sum_j prof_j * phi(center_j + delta); zero profile cells skipped.
double shifted_pairing(std::span<const double> prof, const Grid& g, const GridFunction& phi,
                       double delta) {
  double s = 0.0;
  if (delta == 0.0 && phi.grid() == g) {
    const auto pv = phi.values();
    for (size_t i = 0; i < prof.size(); ++i) s += prof[i] * pv[i];
  } else {
    for (int j = g.lo; j <= g.hi; ++j) {
      double a = prof[static_cast<size_t>(g.index_of(j))];
      if (a != 0.0) s += a * phi.interp_at(g.center(j) + delta);
    }
  }
  return g.tick * s;
}

bool all_zero(std::span<const double> v) {
  for (double x : v)
    if (x != 0.0) return false;
  return true;
}

void detect_rank1(SlowProfileField& field) {
  // reference = row of largest max-norm; rank-1 iff every row is a scalar
  // multiple of it (relative tolerance 1e-12)
  size_t best = 0;
  double best_norm = -1.0;
  for (size_t r = 0; r < field.rows.size(); ++r) {
    double m = 0;
    for (double x : field.rows[r]) m = std::max(m, std::abs(x));
    if (m > best_norm) {
      best_norm = m;
      best = r;
    }
  }
  field.rank1 = true;
  if (best_norm <= 0.0) {  // identically zero field
    field.ref.assign(field.rows.empty() ? 0 : field.rows[0].size(), 0.0);
    field.coef.assign(field.rows.size(), 0.0);
    return;
  }
  field.ref = field.rows[best];
  size_t pivot = 0;
  for (size_t i = 0; i < field.ref.size(); ++i)
    if (std::abs(field.ref[i]) > std::abs(field.ref[pivot])) pivot = i;
  field.coef.resize(field.rows.size());
  for (size_t r = 0; r < field.rows.size(); ++r) {
    double c = field.rows[r][pivot] / field.ref[pivot];
    field.coef[r] = c;
    for (size_t i = 0; i < field.ref.size(); ++i) {
      if (std::abs(field.rows[r][i] - c * field.ref[i]) > 1e-12 * (best_norm + 1.0)) {
        field.rank1 = false;
        field.coef.clear();
        field.ref.clear();
        return;
      }
    }
  }
}

void build_h_table(SlowProfileField& field, const Grid& g, const GridFunction& h,
                   double delta_span) {
  if (!field.rank1 || field.ref.empty() || all_zero(field.ref)) {
    field.h_table.assign(2, 0.0);
    field.delta_lo = -1.0;
    field.delta_step = 2.0;
    return;
  }
  field.delta_step = 0.25 * g.tick;
  field.delta_lo = -delta_span;
  size_t n = static_cast<size_t>(std::ceil(2.0 * delta_span / field.delta_step)) + 2;
  field.h_table.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double d = field.delta_lo + static_cast<double>(i) * field.delta_step;
    field.h_table[i] = shifted_pairing(field.ref, g, h, d);
  }
}

}  // namespace

double SlowProfileField::h_pair_ref(double delta) const {
  double s = (delta - delta_lo) / delta_step;
  if (s <= 0) return h_table.front();
  size_t i = static_cast<size_t>(std::floor(s));
  if (i + 1 >= h_table.size()) return h_table.back();
  double w = s - static_cast<double>(i);
  return (1 - w) * h_table[i] + w * h_table[i + 1];
}

bool SlowProfileField::all_zero_rows() const {
  if (rank1) {
    if (ref.empty() || all_zero(ref)) return true;
    return all_zero(coef);
  }
  for (const auto& r : rows)
    if (!all_zero(r)) return false;
  return true;
}

SlowSetup SlowSetup::make(const ModelSpec& spec, const LimitPath& path, double dt_sde,
                          int history_budget) {
  SlowSetup s;
  s.spec = &spec;
  s.path = &path;
  s.h = spec.h_on(path.grid);
  s.dt_sde = dt_sde;
  s.history_budget = history_budget;
  const size_t rows = path.rows();
  s.f.rows.resize(rows);
  s.fb.rows.resize(rows);
  s.fy.rows.resize(rows);
  s.dxf.rows.resize(rows);
  s.pb_row.resize(rows);
  s.py_row.resize(rows);
  s.sigma_row.resize(rows);
  for (size_t r = 0; r < rows; ++r) {
    double b = path.B[r], y = path.Y[r];
    GridFunction f = spec.f_on(path.grid, b, y);
    GridFunction fb = spec.fb_on(path.grid, b, y);
    GridFunction fy = spec.fy_on(path.grid, b, y);
    s.f.rows[r].assign(f.values().begin(), f.values().end());
    s.fb.rows[r].assign(fb.values().begin(), fb.values().end());
    s.fy.rows[r].assign(fy.values().begin(), fy.values().end());
    s.dxf.rows[r] = central_diff_row(s.f.rows[r], path.grid.tick);
    s.pb_row[r] = spec.pb_at(b, y);
    s.py_row[r] = spec.py_at(b, y);
    s.sigma_row[r] = std::sqrt(std::max(0.0, spec.pA(b, y) + spec.pB(b, y)));
  }
  double bmin = path.B[0], bmax = path.B[0];
  for (double b : path.B) {
    bmin = std::min(bmin, b);
    bmax = std::max(bmax, b);
  }
  double span = (bmax - bmin) + 4.0 * path.grid.tick + 1e-9;
  for (SlowProfileField* f : {&s.f, &s.fb, &s.fy, &s.dxf}) {
    detect_rank1(*f);
    build_h_table(*f, path.grid, s.h, span);
  }
  return s;
}

SlowIntegrator::SlowIntegrator(const SlowSetup& s) : s_(&s), zu_(s.path->grid) {
  const size_t n = static_cast<size_t>(s.path->grid.size());
  ux0_.resize(n);
  fbrow_.resize(n);
  fyrow_.resize(n);
  Node n0{};
  n0.t = 0.0;
  n0.B = s.path->B_at(0.0);
  n0.zb = 0.0;
  n0.zy = 0.0;
  n0.c_f = s.f.rank1 ? s.f.coef[0] : 0.0;
  n0.c_fb = s.fb.rank1 ? s.fb.coef[0] : 0.0;
  n0.c_fy = s.fy.rank1 ? s.fy.coef[0] : 0.0;
  n0.c_dxf = s.dxf.rank1 ? s.dxf.coef[0] : 0.0;
  if (!s.f.rank1) n0.f = s.f.rows[0];
  if (!s.fb.rank1) n0.fb = s.fb.rows[0];
  if (!s.fy.rank1) n0.fy = s.fy.rows[0];
  if (!s.dxf.rank1) n0.dxf = s.dxf.rows[0];
  nodes_.push_back(std::move(n0));
}

// <prof_s, h(.+delta)> for one node: rank-1 table hit or a direct product.
double SlowIntegrator::node_h_pair(const Node& nd, const SlowProfileField& field, double c_scalar,
                                   const std::vector<double>& vec, double delta) const {
  (void)nd;
  if (field.rank1) {
    if (c_scalar == 0.0) return 0.0;
    return c_scalar * field.h_pair_ref(delta);
  }
  return shifted_pairing(vec, s_->path->grid, s_->h, delta);
}

void SlowIntegrator::apply_pending_jumps() {
  const LimitPath& p = *s_->path;
  const double eps = 1e-12 * std::max(1.0, std::abs(t_));
  while (next_jump_ < p.jump_times.size() && p.jump_times[next_jump_] <= t_ + eps) {
    double c = p.jump_sizes[next_jump_];
    zu_ = zu_.shifted_by(-c);  // Zu(t+, x) = Zu(t, x - c): the field rides the frame
    zy_weak_ = inner_product(s_->h, zu_);
    ++next_jump_;
  }
}

void SlowIntegrator::step(double dt, Rng& rng) {
  const LimitPath& path = *s_->path;
  const Grid& g = path.grid;
  const size_t n = static_cast<size_t>(g.size());
  const double t0 = t_;
  const double t1 = t_ + dt;

  size_t i = path.segment(t0);
  double w = 0.0;
  bool has_next = i + 1 < path.rows() && path.t[i + 1] > path.t[i];
  if (has_next) w = std::clamp((t0 - path.t[i]) / (path.t[i + 1] - path.t[i]), 0.0, 1.0);
  auto lerp = [&](const std::vector<double>& row) {
    return has_next ? (1 - w) * row[i] + w * row[i + 1] : row[i];
  };
  double pb = lerp(s_->pb_row), py = lerp(s_->py_row), sigmaB = lerp(s_->sigma_row);
  auto lerp_field_into = [&](const SlowProfileField& f, std::vector<double>& out) {
    if (f.rank1) {
      double c = lerp(f.coef);
      for (size_t cdx = 0; cdx < n; ++cdx) out[cdx] = c * (f.ref.empty() ? 0.0 : f.ref[cdx]);
    } else {
      for (size_t cdx = 0; cdx < n; ++cdx)
        out[cdx] = has_next ? (1 - w) * f.rows[i][cdx] + w * f.rows[i + 1][cdx] : f.rows[i][cdx];
    }
  };
  lerp_field_into(s_->fb, fbrow_);
  lerp_field_into(s_->fy, fyrow_);
  path.ux_row_at(t0, ux0_);

  const double zy_drive = s_->use_weak_zy ? zy_weak_ : zy_;
  const double dW = std::sqrt(dt) * rng.normal();
  const double dZB = (pb * zb_ + py * zy_drive) * dt + sigmaB * dW;
  const double zb1 = zb_ + dZB;
  const double dB = path.B_at(t1) - path.B_at(t0);

  // weak-form field: dZu = du/dx dZB + f_b ZB dt + f_y ZY dt + dZu/dx dB
  auto zv = zu_.values();
  for (size_t c = 0; c < n; ++c)
    zv[c] += ux0_[c] * dZB + (fbrow_[c] * zb_ + fyrow_[c] * zy_weak_) * dt;
  if (dB != 0.0) {
    int m = std::max(1, static_cast<int>(std::ceil(std::abs(dB) / (0.8 * g.tick))));
    substeps_max_ = std::max(substeps_max_, m);
    double db = dB / m;
    for (int sub = 0; sub < m; ++sub) {
      if (db > 0.0) {
        for (size_t c = 0; c < n; ++c) {
          double up = c + 1 < n ? zv[c + 1] : 0.0;
          zv[c] += db * (up - zv[c]) / g.tick;
        }
      } else {
        for (size_t c = n; c-- > 0;) {
          double dn = c >= 1 ? zv[c - 1] : 0.0;
          zv[c] += db * (zv[c] - dn) / g.tick;
        }
      }
    }
  }
  zy_weak_ = inner_product(s_->h, zu_);

  // history node at t1, then the Volterra identity solved for ZY(t1)
  Node nd{};
  nd.t = t1;
  nd.B = path.B_at(t1);
  nd.zb = zb1;
  {
    size_t i1 = path.segment(t1);
    double w1 = 0.0;
    bool hn = i1 + 1 < path.rows() && path.t[i1 + 1] > path.t[i1];
    if (hn) w1 = std::clamp((t1 - path.t[i1]) / (path.t[i1 + 1] - path.t[i1]), 0.0, 1.0);
    auto lerp1 = [&](const std::vector<double>& row) {
      return hn ? (1 - w1) * row[i1] + w1 * row[i1 + 1] : row[i1];
    };
    auto set_node_field = [&](const SlowProfileField& f, double& cscal, std::vector<double>& vec) {
      if (f.rank1) {
        cscal = lerp1(f.coef);
      } else {
        vec.resize(n);
        for (size_t cdx = 0; cdx < n; ++cdx)
          vec[cdx] = hn ? (1 - w1) * f.rows[i1][cdx] + w1 * f.rows[i1 + 1][cdx] : f.rows[i1][cdx];
      }
    };
    set_node_field(s_->f, nd.c_f, nd.f);
    set_node_field(s_->fb, nd.c_fb, nd.fb);
    set_node_field(s_->fy, nd.c_fy, nd.fy);
    set_node_field(s_->dxf, nd.c_dxf, nd.dxf);
  }
  nodes_.push_back(std::move(nd));

  const size_t k = nodes_.size() - 1;
  const double b_now = nodes_[k].B;
  double rhs = 0.0, end_coeff = 0.0;
  for (size_t sdx = 0; sdx <= k; ++sdx) {
    const Node& s = nodes_[sdx];
    double wq;
    if (sdx == 0)
      wq = 0.5 * (nodes_[1].t - nodes_[0].t);
    else if (sdx == k)
      wq = 0.5 * (nodes_[k].t - nodes_[k - 1].t);
    else
      wq = 0.5 * (nodes_[sdx + 1].t - nodes_[sdx - 1].t);
    double delta = s.B - b_now;
    double term = 0.0;
    if (s.zb != 0.0) {
      term += node_h_pair(s, s_->fb, s.c_fb, s.fb, delta) * s.zb;
      term -= node_h_pair(s, s_->dxf, s.c_dxf, s.dxf, delta) * s.zb;  // <f, h'(.+d)> = -<dxf, h(.+d)>
    }
    if (sdx == k) {
      end_coeff = wq * node_h_pair(s, s_->fy, s.c_fy, s.fy, 0.0);
    } else if (s.zy != 0.0) {
      term += node_h_pair(s, s_->fy, s.c_fy, s.fy, delta) * s.zy;
    }
    rhs += wq * term;
  }
  path.ux_row_at(t1, ux0_);
  const auto hv = s_->h.values();
  double hux = 0.0;
  for (size_t c = 0; c < n; ++c) hux += hv[c] * ux0_[c];
  rhs += zb1 * g.tick * hux;  // -ZB_t <u(t), h'> via discrete integration by parts
  nodes_[k].zy = rhs / (1.0 - end_coeff);

  zb_ = zb1;
  zy_ = nodes_[k].zy;
  t_ = t1;
  if (static_cast<int>(nodes_.size()) > s_->history_budget) coarsen_history();
}

void SlowIntegrator::set_initial_ZB(double zb) {
  if (nodes_.size() != 1) throw std::logic_error("set_initial_ZB: integrator already stepped");
  zb_ = zb;
  nodes_[0].zb = zb;
}

double SlowIntegrator::volterra_pair(const GridFunction& phi) const {
  const Grid& g = s_->path->grid;
  const size_t k = nodes_.size() - 1;
  std::vector<double> prof;
  auto pairing = [&](const SlowProfileField& f, const Node& nd, double cscal,
                     const std::vector<double>& vec, double delta) {
    if (!f.rank1) return shifted_pairing(vec, g, phi, delta);
    if (cscal == 0.0 || f.ref.empty()) return 0.0;
    prof.resize(f.ref.size());
    for (size_t i = 0; i < f.ref.size(); ++i) prof[i] = cscal * f.ref[i];
    return shifted_pairing(prof, g, phi, delta);
  };
  double sum = 0.0;
  for (size_t sdx = 0; sdx <= k; ++sdx) {
    const Node& nd = nodes_[sdx];
    double wq;
    if (k == 0)
      wq = 0.0;
    else if (sdx == 0)
      wq = 0.5 * (nodes_[1].t - nodes_[0].t);
    else if (sdx == k)
      wq = 0.5 * (nodes_[k].t - nodes_[k - 1].t);
    else
      wq = 0.5 * (nodes_[sdx + 1].t - nodes_[sdx - 1].t);
    if (wq == 0.0) continue;
    double delta = nd.B - nodes_[k].B;
    double term = 0.0;
    if (nd.zb != 0.0) {
      term += pairing(s_->fb, nd, nd.c_fb, nd.fb, delta) * nd.zb;
      term -= pairing(s_->dxf, nd, nd.c_dxf, nd.dxf, delta) * nd.zb;
    }
    if (nd.zy != 0.0) term += pairing(s_->fy, nd, nd.c_fy, nd.fy, delta) * nd.zy;
    sum += wq * term;
  }
  // -ZB_t <u(t), phi'> = +ZB_t <du/dx(t), phi>
  GridFunction ux = s_->path->ux_at(t_);
  return sum + zb_ * inner_product(ux, phi);
}

void SlowIntegrator::coarsen_history() {
  // keep first and last, drop every other interior node; trapezoid weights are
  // recomputed from node times, so the decimation error stays second order
  std::vector<Node> kept;
  kept.reserve(nodes_.size() / 2 + 2);
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (i == 0 || i + 1 == nodes_.size() || i % 2 == 0) kept.push_back(std::move(nodes_[i]));
  }
  nodes_ = std::move(kept);
  ++coarsenings_;
}

void SlowIntegrator::advance_to(double T, Rng& rng) {
  const LimitPath& p = *s_->path;
  const double eps = 1e-12 * std::max(1.0, std::abs(T));
  while (t_ < T - eps) {
    apply_pending_jumps();
    double target = T;
    if (next_jump_ < p.jump_times.size() && p.jump_times[next_jump_] > t_ + eps &&
        p.jump_times[next_jump_] < target)
      target = p.jump_times[next_jump_];
    step(std::min(s_->dt_sde, target - t_), rng);
  }
  t_ = std::max(t_, T);
}

double SlowIntegrator::pair(const GridFunction& phi) const { return inner_product(zu_, phi); }

void run_slow_paths(const SlowSetup& setup, long paths, std::uint64_t master_seed,
                    std::span<const double> probe_times, int parallelism,
                    const std::function<void(long, size_t, const SlowIntegrator&)>& visit) {
  std::vector<double> probes(probe_times.begin(), probe_times.end());
  parallel_for(paths, parallelism, [&](long p) {
    Rng rng(master_seed ^ static_cast<std::uint64_t>(p));
    SlowIntegrator it(setup);
    for (size_t m = 0; m < probes.size(); ++m) {
      it.advance_to(probes[m], rng);
      visit(p, m, it);
    }
  });
}

}  // namespace lob
