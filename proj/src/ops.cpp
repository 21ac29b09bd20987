#include "swie/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swie {

BoolMat BoolMat::causal(size_t t) { return causal_window(0, t, t); }

BoolMat BoolMat::causal_window(size_t row_offset, size_t rows, size_t cols) {
  BoolMat m(rows, cols, false);
  for (size_t r = 0; r < rows; ++r) {
    const size_t limit = std::min(cols, row_offset + r + 1);
    for (size_t c = 0; c < limit; ++c) m.set(r, c, true);
  }
  return m;
}

static bool track(Graph* g, std::initializer_list<const Tensor*> ins) {
  if (!g) return false;
  for (const Tensor* t : ins) {
    if (t->requires_grad()) return true;
  }
  return false;
}

static void accumulate(Tensor& t, const std::vector<real>& delta) {
  if (!t.requires_grad()) return;
  auto& gr = t.grad();
  for (size_t i = 0; i < gr.size(); ++i) gr[i] += delta[i];
}

Tensor matmul(const Tensor& a, const Tensor& b, Graph* g) {
  ensure(a.shape().size() == 2 && b.shape().size() == 2, "matmul: operands must be 2-d");
  const size_t m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
  if (k != k2) {
    fail("matmul: dimension mismatch " + std::to_string(m) + "x" + std::to_string(k) +
         " * " + std::to_string(k2) + "x" + std::to_string(n));
  }
  Tensor out({m, n});
  const real* pa = a.values().data();
  const real* pb = b.values().data();
  real* po = out.values().data();
  for (size_t i = 0; i < m; ++i) {
    for (size_t kk = 0; kk < k; ++kk) {
      const real av = pa[i * k + kk];
      if (av == real(0)) continue;
      const real* brow = pb + kk * n;
      real* orow = po + i * n;
      for (size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  ensure_finite(out, "matmul");
  if (track(g, {&a, &b})) {
    out.set_requires_grad(true);
    Tensor ac = a, bc = b, oc = out;
    g->record("matmul", {a, b}, out, [ac, bc, oc, m, k, n]() mutable {
      const auto& go = oc.grad();
      if (ac.requires_grad()) {
        auto& ga = ac.grad();
        const auto& bv = bc.values();
        for (size_t i = 0; i < m; ++i)
          for (size_t j = 0; j < n; ++j) {
            const real gij = go[i * n + j];
            if (gij == real(0)) continue;
            for (size_t kk = 0; kk < k; ++kk) ga[i * k + kk] += gij * bv[kk * n + j];
          }
      }
      if (bc.requires_grad()) {
        auto& gb = bc.grad();
        const auto& av = ac.values();
        for (size_t i = 0; i < m; ++i)
          for (size_t kk = 0; kk < k; ++kk) {
            const real aik = av[i * k + kk];
            if (aik == real(0)) continue;
            for (size_t j = 0; j < n; ++j) gb[kk * n + j] += aik * go[i * n + j];
          }
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& a, Graph* g) {
  ensure(a.shape().size() == 2, "transpose: operand must be 2-d");
  const size_t r = a.rows(), c = a.cols();
  Tensor out({c, r});
  for (size_t i = 0; i < r; ++i)
    for (size_t j = 0; j < c; ++j) out.at(j, i) = a.at(i, j);
  if (track(g, {&a})) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    g->record("transpose", {a}, out, [ac, oc, r, c]() mutable {
      if (!ac.requires_grad()) return;
      auto& ga = ac.grad();
      const auto& go = oc.grad();
      for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) ga[i * c + j] += go[j * r + i];
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b, Graph* g) {
  ensure(a.shape() == b.shape(), "add: shape mismatch");
  Tensor out(a.shape());
  for (size_t i = 0; i < out.size(); ++i) out.at(i) = a.at(i) + b.at(i);
  ensure_finite(out, "add");
  if (track(g, {&a, &b})) {
    out.set_requires_grad(true);
    Tensor ac = a, bc = b, oc = out;
    g->record("add", {a, b}, out, [ac, bc, oc]() mutable {
      accumulate(ac, oc.grad());
      accumulate(bc, oc.grad());
    });
  }
  return out;
}

Tensor scale(const Tensor& a, real c, Graph* g) {
  Tensor out(a.shape());
  for (size_t i = 0; i < out.size(); ++i) out.at(i) = a.at(i) * c;
  ensure_finite(out, "scale");
  if (track(g, {&a})) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    g->record("scale", {a}, out, [ac, oc, c]() mutable {
      if (!ac.requires_grad()) return;
      auto& ga = ac.grad();
      const auto& go = oc.grad();
      for (size_t i = 0; i < ga.size(); ++i) ga[i] += c * go[i];
    });
  }
  return out;
}

Tensor add_bias_rows(const Tensor& x, const Tensor& bias, Graph* g) {
  const size_t t = x.rows(), d = x.cols();
  ensure(bias.size() == d, "add_bias_rows: bias size mismatch");
  Tensor out(x.shape());
  for (size_t i = 0; i < t; ++i)
    for (size_t j = 0; j < d; ++j) out.at(i, j) = x.at(i, j) + bias.at(j);
  ensure_finite(out, "add_bias_rows");
  if (track(g, {&x, &bias})) {
    out.set_requires_grad(true);
    Tensor xc = x, bc = bias, oc = out;
    g->record("add_bias_rows", {x, bias}, out, [xc, bc, oc, t, d]() mutable {
      const auto& go = oc.grad();
      if (xc.requires_grad()) accumulate(xc, go);
      if (bc.requires_grad()) {
        auto& gb = bc.grad();
        for (size_t i = 0; i < t; ++i)
          for (size_t j = 0; j < d; ++j) gb[j] += go[i * d + j];
      }
    });
  }
  return out;
}

Tensor relu(const Tensor& x, Graph* g) {
  Tensor out(x.shape());
  for (size_t i = 0; i < out.size(); ++i) out.at(i) = x.at(i) > real(0) ? x.at(i) : real(0);
  if (track(g, {&x})) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    g->record("relu", {x}, out, [xc, oc]() mutable {
      if (!xc.requires_grad()) return;
      auto& gx = xc.grad();
      const auto& go = oc.grad();
      // subgradient 0 at x == 0
      for (size_t i = 0; i < gx.size(); ++i)
        if (xc.values()[i] > real(0)) gx[i] += go[i];
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, real eps, Graph* g) {
  ensure(x.shape().size() == 2, "layer_norm: input must be 2-d");
  const size_t t = x.rows(), d = x.cols();
  ensure(d >= 1, "layer_norm: empty feature dimension");
  ensure(eps > real(0), "layer_norm: eps must be positive");
  ensure(gain.size() == d && bias.size() == d, "layer_norm: parameter size mismatch");
  Tensor out(x.shape());
  // keep per-row stats for backward
  std::vector<real> mean(t), inv_std(t);
  for (size_t i = 0; i < t; ++i) {
    real mu = 0;
    for (size_t j = 0; j < d; ++j) mu += x.at(i, j);
    mu /= real(d);
    real var = 0;
    for (size_t j = 0; j < d; ++j) {
      const real c = x.at(i, j) - mu;
      var += c * c;
    }
    var /= real(d);
    const real inv = real(1) / std::sqrt(var + eps);
    mean[i] = mu;
    inv_std[i] = inv;
    for (size_t j = 0; j < d; ++j)
      out.at(i, j) = (x.at(i, j) - mu) * inv * gain.at(j) + bias.at(j);
  }
  ensure_finite(out, "layer_norm");
  if (track(g, {&x, &gain, &bias})) {
    out.set_requires_grad(true);
    Tensor xc = x, gc = gain, bc = bias, oc = out;
    g->record("layer_norm", {x, gain, bias}, out,
              [xc, gc, bc, oc, mean, inv_std, t, d]() mutable {
                const auto& go = oc.grad();
                for (size_t i = 0; i < t; ++i) {
                  const real mu = mean[i], inv = inv_std[i];
                  // dxhat, and reductions for the mean/variance terms
                  real sum_dxhat = 0, sum_dxhat_xc = 0, sum_xc = 0;
                  for (size_t j = 0; j < d; ++j) {
                    const real xcv = xc.values()[i * d + j] - mu;
                    const real dxhat = go[i * d + j] * gc.values()[j];
                    sum_dxhat += dxhat;
                    sum_dxhat_xc += dxhat * xcv;
                    sum_xc += xcv;
                  }
                  const real dvar = sum_dxhat_xc * real(-0.5) * inv * inv * inv;
                  const real dmu =
                      -inv * sum_dxhat - dvar * real(2) / real(d) * sum_xc;
                  if (xc.requires_grad()) {
                    auto& gx = xc.grad();
                    for (size_t j = 0; j < d; ++j) {
                      const real xcv = xc.values()[i * d + j] - mu;
                      const real dxhat = go[i * d + j] * gc.values()[j];
                      gx[i * d + j] +=
                          dxhat * inv + dvar * real(2) * xcv / real(d) + dmu / real(d);
                    }
                  }
                  if (gc.requires_grad()) {
                    auto& gg = gc.grad();
                    for (size_t j = 0; j < d; ++j) {
                      const real xhat = (xc.values()[i * d + j] - mu) * inv;
                      gg[j] += go[i * d + j] * xhat;
                    }
                  }
                  if (bc.requires_grad()) {
                    auto& gb = bc.grad();
                    for (size_t j = 0; j < d; ++j) gb[j] += go[i * d + j];
                  }
                }
              });
  }
  return out;
}

Tensor masked_softmax_rows(const Tensor& scores, const BoolMat& mask, Graph* g) {
  ensure(scores.shape().size() == 2, "masked_softmax_rows: input must be 2-d");
  const size_t t = scores.rows(), n = scores.cols();
  ensure(mask.rows == t && mask.cols == n, "masked_softmax_rows: mask shape mismatch");
  Tensor out({t, n});
  for (size_t i = 0; i < t; ++i) {
    real mx = -std::numeric_limits<real>::infinity();
    bool any = false;
    for (size_t j = 0; j < n; ++j) {
      if (mask.at(i, j)) {
        any = true;
        mx = std::max(mx, scores.at(i, j));
      }
    }
    if (!any) fail("masked_softmax_rows: degenerate fully-masked row " + std::to_string(i));
    real denom = 0;
    for (size_t j = 0; j < n; ++j) {
      if (mask.at(i, j)) {
        const real e = std::exp(scores.at(i, j) - mx);
        out.at(i, j) = e;
        denom += e;
      }
    }
    for (size_t j = 0; j < n; ++j) {
      if (mask.at(i, j)) out.at(i, j) /= denom;
    }
  }
  ensure_finite(out, "masked_softmax_rows");
  if (track(g, {&scores})) {
    out.set_requires_grad(true);
    Tensor sc = scores, oc = out;
    BoolMat mc = mask;
    g->record("masked_softmax_rows", {scores}, out, [sc, oc, mc, t, n]() mutable {
      if (!sc.requires_grad()) return;
      auto& gs = sc.grad();
      const auto& go = oc.grad();
      const auto& p = oc.values();
      for (size_t i = 0; i < t; ++i) {
        real dot = 0;
        for (size_t j = 0; j < n; ++j)
          if (mc.at(i, j)) dot += go[i * n + j] * p[i * n + j];
        for (size_t j = 0; j < n; ++j)
          if (mc.at(i, j)) gs[i * n + j] += p[i * n + j] * (go[i * n + j] - dot);
      }
    });
  }
  return out;
}

Tensor max_pool_positions(const Tensor& h, std::span<const size_t> positions, Graph* g) {
  ensure(h.shape().size() == 2, "max_pool_positions: input must be 2-d");
  ensure(!positions.empty(), "max_pool_positions: empty position set");
  const size_t t = h.rows(), d = h.cols();
  std::vector<size_t> pos(positions.begin(), positions.end());
  std::sort(pos.begin(), pos.end());
  for (size_t p : pos) ensure(p < t, "max_pool_positions: position out of range");
  Tensor out({1, d});
  std::vector<size_t> argmax(d);
  for (size_t j = 0; j < d; ++j) {
    size_t best = pos[0];
    real bv = h.at(pos[0], j);
    for (size_t k = 1; k < pos.size(); ++k) {
      const real v = h.at(pos[k], j);
      if (v > bv) {  // strict: first index wins ties
        bv = v;
        best = pos[k];
      }
    }
    out.at(0, j) = bv;
    argmax[j] = best;
  }
  if (track(g, {&h})) {
    out.set_requires_grad(true);
    Tensor hc = h, oc = out;
    g->record("max_pool_positions", {h}, out, [hc, oc, argmax, d]() mutable {
      if (!hc.requires_grad()) return;
      auto& gh = hc.grad();
      const auto& go = oc.grad();
      for (size_t j = 0; j < d; ++j) gh[argmax[j] * d + j] += go[j];
    });
  }
  return out;
}

Tensor cross_entropy_mle(const Tensor& logits, std::span<const int> targets,
                         const std::vector<uint8_t>& loss_mask, Graph* g) {
  ensure(logits.shape().size() == 2, "cross_entropy_mle: logits must be 2-d");
  const size_t t = logits.rows(), v = logits.cols();
  ensure(targets.size() == t && loss_mask.size() == t,
         "cross_entropy_mle: targets/mask length mismatch");
  size_t active = 0;
  for (uint8_t m : loss_mask) active += m ? 1 : 0;
  ensure(active > 0, "cross_entropy_mle: all positions masked out");
  real total = 0;
  for (size_t i = 0; i < t; ++i) {
    if (!loss_mask[i]) continue;
    const int tgt = targets[i];
    ensure(tgt >= 0 && static_cast<size_t>(tgt) < v, "cross_entropy_mle: target out of range");
    real mx = logits.at(i, 0);
    for (size_t j = 1; j < v; ++j) mx = std::max(mx, logits.at(i, j));
    real denom = 0;
    for (size_t j = 0; j < v; ++j) denom += std::exp(logits.at(i, j) - mx);
    total += std::log(denom) + mx - logits.at(i, static_cast<size_t>(tgt));
  }
  Tensor out = Tensor::scalar(total / real(active));
  ensure_finite(out, "cross_entropy_mle");
  if (track(g, {&logits})) {
    out.set_requires_grad(true);
    Tensor lc = logits, oc = out;
    std::vector<int> tg(targets.begin(), targets.end());
    std::vector<uint8_t> mk = loss_mask;
    g->record("cross_entropy_mle", {logits}, out, [lc, oc, tg, mk, t, v, active]() mutable {
      if (!lc.requires_grad()) return;
      auto& gl = lc.grad();
      const real go = oc.grad()[0];
      for (size_t i = 0; i < t; ++i) {
        if (!mk[i]) continue;
        real mx = lc.values()[i * v];
        for (size_t j = 1; j < v; ++j) mx = std::max(mx, lc.values()[i * v + j]);
        real denom = 0;
        for (size_t j = 0; j < v; ++j) denom += std::exp(lc.values()[i * v + j] - mx);
        for (size_t j = 0; j < v; ++j) {
          const real p = std::exp(lc.values()[i * v + j] - mx) / denom;
          const real y = (static_cast<size_t>(tg[i]) == j) ? real(1) : real(0);
          gl[i * v + j] += go * (p - y) / real(active);
        }
      }
    });
  }
  return out;
}

Tensor embed_rows(const Tensor& table, std::span<const int> ids, Graph* g) {
  ensure(table.shape().size() == 2, "embed_rows: table must be 2-d");
  const size_t v = table.rows(), d = table.cols();
  Tensor out({ids.size(), d});
  for (size_t i = 0; i < ids.size(); ++i) {
    ensure(ids[i] >= 0 && static_cast<size_t>(ids[i]) < v, "embed_rows: id out of range");
    for (size_t j = 0; j < d; ++j) out.at(i, j) = table.at(static_cast<size_t>(ids[i]), j);
  }
  if (track(g, {&table})) {
    out.set_requires_grad(true);
    Tensor tc = table, oc = out;
    std::vector<int> idc(ids.begin(), ids.end());
    g->record("embed_rows", {table}, out, [tc, oc, idc, d]() mutable {
      if (!tc.requires_grad()) return;
      auto& gt = tc.grad();
      const auto& go = oc.grad();
      for (size_t i = 0; i < idc.size(); ++i)
        for (size_t j = 0; j < d; ++j)
          gt[static_cast<size_t>(idc[i]) * d + j] += go[i * d + j];
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& x, size_t first, size_t count, Graph* g) {
  ensure(x.shape().size() == 2, "slice_rows: input must be 2-d");
  ensure(first + count <= x.rows(), "slice_rows: range out of bounds");
  const size_t d = x.cols();
  Tensor out({count, d});
  for (size_t i = 0; i < count; ++i)
    for (size_t j = 0; j < d; ++j) out.at(i, j) = x.at(first + i, j);
  if (track(g, {&x})) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    g->record("slice_rows", {x}, out, [xc, oc, first, count, d]() mutable {
      if (!xc.requires_grad()) return;
      auto& gx = xc.grad();
      const auto& go = oc.grad();
      for (size_t i = 0; i < count; ++i)
        for (size_t j = 0; j < d; ++j) gx[(first + i) * d + j] += go[i * d + j];
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& x, size_t first, size_t count, Graph* g) {
  ensure(x.shape().size() == 2, "slice_cols: input must be 2-d");
  ensure(first + count <= x.cols(), "slice_cols: range out of bounds");
  const size_t t = x.rows(), d = x.cols();
  Tensor out({t, count});
  for (size_t i = 0; i < t; ++i)
    for (size_t j = 0; j < count; ++j) out.at(i, j) = x.at(i, first + j);
  if (track(g, {&x})) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    g->record("slice_cols", {x}, out, [xc, oc, first, count, t, d]() mutable {
      if (!xc.requires_grad()) return;
      auto& gx = xc.grad();
      const auto& go = oc.grad();
      for (size_t i = 0; i < t; ++i)
        for (size_t j = 0; j < count; ++j) gx[i * d + first + j] += go[i * count + j];
    });
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts, Graph* g) {
  ensure(!parts.empty(), "concat_cols: no parts");
  const size_t t = parts[0].rows();
  size_t total = 0;
  for (const auto& p : parts) {
    ensure(p.rows() == t, "concat_cols: row count mismatch");
    total += p.cols();
  }
  Tensor out({t, total});
  size_t off = 0;
  for (const auto& p : parts) {
    for (size_t i = 0; i < t; ++i)
      for (size_t j = 0; j < p.cols(); ++j) out.at(i, off + j) = p.at(i, j);
    off += p.cols();
  }
  bool any = false;
  if (g) {
    for (const auto& p : parts)
      if (p.requires_grad()) any = true;
  }
  if (any) {
    out.set_requires_grad(true);
    std::vector<Tensor> pc = parts;
    Tensor oc = out;
    g->record("concat_cols", parts, out, [pc, oc, t, total]() mutable {
      const auto& go = oc.grad();
      size_t off2 = 0;
      for (auto& p : pc) {
        const size_t c = p.cols();
        if (p.requires_grad()) {
          auto& gp = p.grad();
          for (size_t i = 0; i < t; ++i)
            for (size_t j = 0; j < c; ++j) gp[i * c + j] += go[i * total + off2 + j];
        }
        off2 += c;
      }
    });
  }
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts, Graph* g) {
  ensure(!parts.empty(), "concat_rows: no parts");
  const size_t d = parts[0].cols();
  size_t total = 0;
  for (const auto& p : parts) {
    ensure(p.cols() == d, "concat_rows: column count mismatch");
    total += p.rows();
  }
  Tensor out({total, d});
  size_t off = 0;
  for (const auto& p : parts) {
    for (size_t i = 0; i < p.rows(); ++i)
      for (size_t j = 0; j < d; ++j) out.at(off + i, j) = p.at(i, j);
    off += p.rows();
  }
  bool any = false;
  if (g) {
    for (const auto& p : parts)
      if (p.requires_grad()) any = true;
  }
  if (any) {
    out.set_requires_grad(true);
    std::vector<Tensor> pc = parts;
    Tensor oc = out;
    g->record("concat_rows", parts, out, [pc, oc, d]() mutable {
      const auto& go = oc.grad();
      size_t off2 = 0;
      for (auto& p : pc) {
        const size_t r = p.rows();
        if (p.requires_grad()) {
          auto& gp = p.grad();
          for (size_t i = 0; i < r; ++i)
            for (size_t j = 0; j < d; ++j) gp[i * d + j] += go[(off2 + i) * d + j];
        }
        off2 += r;
      }
    });
  }
  return out;
}

Tensor add_scaled_rowvec(const Tensor& x, const Tensor& vec, std::span<const real> w,
                         Graph* g) {
  const size_t t = x.rows(), d = x.cols();
  ensure(vec.size() == d, "add_scaled_rowvec: vector size mismatch");
  ensure(w.size() == t, "add_scaled_rowvec: weight count mismatch");
  Tensor out(x.shape());
  for (size_t i = 0; i < t; ++i)
    for (size_t j = 0; j < d; ++j) out.at(i, j) = x.at(i, j) + w[i] * vec.at(j);
  ensure_finite(out, "add_scaled_rowvec");
  if (track(g, {&x, &vec})) {
    out.set_requires_grad(true);
    Tensor xc = x, vc = vec, oc = out;
    std::vector<real> wc(w.begin(), w.end());
    g->record("add_scaled_rowvec", {x, vec}, out, [xc, vc, oc, wc, t, d]() mutable {
      const auto& go = oc.grad();
      if (xc.requires_grad()) accumulate(xc, go);
      if (vc.requires_grad()) {
        auto& gv = vc.grad();
        for (size_t i = 0; i < t; ++i)
          for (size_t j = 0; j < d; ++j) gv[j] += wc[i] * go[i * d + j];
      }
    });
  }
  return out;
}

Tensor scalar_weighted_sum(const std::vector<Tensor>& xs, std::span<const real> w, Graph* g) {
  ensure(!xs.empty() && xs.size() == w.size(), "scalar_weighted_sum: size mismatch");
  real total = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    ensure(xs[i].size() == 1, "scalar_weighted_sum: inputs must be scalars");
    total += w[i] * xs[i].item();
  }
  Tensor out = Tensor::scalar(total);
  ensure_finite(out, "scalar_weighted_sum");
  bool any = false;
  if (g) {
    for (const auto& x : xs)
      if (x.requires_grad()) any = true;
  }
  if (any) {
    out.set_requires_grad(true);
    std::vector<Tensor> xc = xs;
    std::vector<real> wc(w.begin(), w.end());
    Tensor oc = out;
    g->record("scalar_weighted_sum", xs, out, [xc, wc, oc]() mutable {
      const real go = oc.grad()[0];
      for (size_t i = 0; i < xc.size(); ++i)
        if (xc[i].requires_grad()) xc[i].grad()[0] += wc[i] * go;
    });
  }
  return out;
}

}  // namespace swie
