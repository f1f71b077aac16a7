#include "naraim/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <limits>
#include <numbers>

#include "naraim/errors.hpp"

namespace naraim {

const Tensor& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  return Var(this, nodes_.size() - 1);
}

VarMap Tape::bind(const ParamTree& params, bool requires_grad) {
  VarMap out;
  for (const auto& [name, t] : params) out.emplace(name, requires_grad ? variable(t) : constant(t));
  return out;
}

Var Tape::record(Tensor value, std::vector<Var> inputs, Backward backward) {
  Node node;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (v.tape_ != this) throw ContractError("tape: input recorded on a different tape");
    node.inputs.push_back(v.id_);
    node.requires_grad = node.requires_grad || nodes_[v.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

std::vector<std::optional<Tensor>> Tape::backward(Var loss) const {
  if (loss.tape_ != this) throw ContractError("backward: loss belongs to a different tape");
  if (value(loss.id_).size() != 1) {
    throw ContractError("backward: loss must be scalar, got " + shape_string(value(loss.id_).dims()));
  }
  std::vector<std::optional<Tensor>> grads(nodes_.size());
  grads[loss.id_] = Tensor(value(loss.id_).dims(), 1.0);
  std::vector<Tensor*> slots;
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (!grads[id] || !node.backward) continue;
    slots.assign(node.inputs.size(), nullptr);
    bool any = false;
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const std::size_t in = node.inputs[k];
      if (!nodes_[in].requires_grad) continue;
      if (!grads[in]) grads[in] = Tensor(nodes_[in].value.dims());
      slots[k] = &*grads[in];
      any = true;
    }
    if (any) node.backward(*this, *grads[id], slots);
  }
  return grads;
}

ParamTree gradient(Var loss, const VarMap& params) {
  if (!loss.valid()) throw ContractError("gradient: invalid loss handle");
  const auto grads = loss.tape().backward(loss);
  ParamTree out;
  for (const auto& [name, var] : params) {
    const auto& g = grads[var.id()];
    out.emplace(name, g ? *g : Tensor(var.dims()));
  }
  return out;
}

ParamTree finite_difference_gradient(const std::function<double(const ParamTree&)>& loss_fn,
                                     const ParamTree& params, double h) {
  if (!(h > 0.0)) throw ContractError("finite_difference_gradient: step must be positive");
  ParamTree probe = params;
  ParamTree out = zeros_like(params);
  for (auto& [name, tensor] : probe) {
    Tensor& g = out.at(name);
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double saved = tensor[i];
      tensor[i] = saved + h;
      const double up = loss_fn(probe);
      tensor[i] = saved - h;
      const double down = loss_fn(probe);
      tensor[i] = saved;
      g[i] = (up - down) / (2.0 * h);
    }
  }
  return out;
}

namespace ops {
namespace {

[[noreturn]] void shape_fail(std::string_view op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible dims " + shape_string(a) + " and " + shape_string(b));
}

Tape& same_tape(std::string_view op, Var a, Var b) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    throw ContractError(std::string(op) + ": operands live on different tapes");
  }
  return a.tape();
}

// Index maps for numpy-style broadcasting of two operands.
struct Broadcast {
  enum class Kind { kSame, kRepeatB, kRepeatA, kGeneral };
  Kind kind = Kind::kSame;
  Shape out;
  std::size_t na = 0;
  std::size_t nb = 0;
  std::vector<std::size_t> ia;
  std::vector<std::size_t> ib;

  std::size_t a_index(std::size_t i) const {
    switch (kind) {
      case Kind::kSame:
      case Kind::kRepeatB:
        return i;
      case Kind::kRepeatA:
        return i % na;
      default:
        return ia[i];
    }
  }
  std::size_t b_index(std::size_t i) const {
    switch (kind) {
      case Kind::kSame:
      case Kind::kRepeatA:
        return i;
      case Kind::kRepeatB:
        return i % nb;
      default:
        return ib[i];
    }
  }
};

bool is_suffix(const Shape& small, const Shape& big) {
  std::size_t lead = 0;
  while (lead + 1 < small.size() && small[lead] == 1) ++lead;
  const std::size_t len = small.size() - lead;
  if (len > big.size()) return false;
  return std::equal(small.begin() + static_cast<std::ptrdiff_t>(lead), small.end(),
                    big.end() - static_cast<std::ptrdiff_t>(len));
}

Broadcast plan_broadcast(std::string_view op, const Shape& a, const Shape& b) {
  Broadcast plan;
  plan.na = shape_size(a);
  plan.nb = shape_size(b);
  if (a == b) {
    plan.out = a;
    return plan;
  }
  const std::size_t rank = std::max(a.size(), b.size());
  plan.out.assign(rank, 1);
  Shape pa(rank, 1), pb(rank, 1);
  std::copy(a.begin(), a.end(), pa.begin() + static_cast<std::ptrdiff_t>(rank - a.size()));
  std::copy(b.begin(), b.end(), pb.begin() + static_cast<std::ptrdiff_t>(rank - b.size()));
  for (std::size_t d = 0; d < rank; ++d) {
    if (pa[d] != pb[d] && pa[d] != 1 && pb[d] != 1) shape_fail(op, a, b);
    plan.out[d] = std::max(pa[d], pb[d]);
  }
  const std::size_t n = shape_size(plan.out);
  if (plan.na == n && is_suffix(b, plan.out)) {
    plan.kind = Broadcast::Kind::kRepeatB;
    return plan;
  }
  if (plan.nb == n && is_suffix(a, plan.out)) {
    plan.kind = Broadcast::Kind::kRepeatA;
    return plan;
  }
  plan.kind = Broadcast::Kind::kGeneral;
  Shape sa(rank, 0), sb(rank, 0);
  std::size_t stride_a = 1, stride_b = 1;
  for (std::size_t d = rank; d-- > 0;) {
    sa[d] = pa[d] == 1 ? 0 : stride_a;
    sb[d] = pb[d] == 1 ? 0 : stride_b;
    stride_a *= pa[d];
    stride_b *= pb[d];
  }
  plan.ia.resize(n);
  plan.ib.resize(n);
  Shape idx(rank, 0);
  std::size_t off_a = 0, off_b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    plan.ia[i] = off_a;
    plan.ib[i] = off_b;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      off_a += sa[d];
      off_b += sb[d];
      if (idx[d] < plan.out[d]) break;
      off_a -= sa[d] * idx[d];
      off_b -= sb[d] * idx[d];
      idx[d] = 0;
    }
  }
  return plan;
}

// f(x, y) forward; dfx/dfy give the partial derivatives at (x, y, f).
template <class F, class Dx, class Dy>
Var binary(std::string_view name, Var a, Var b, F f, Dx dfx, Dy dfy) {
  Tape& tape = same_tape(name, a, b);
  auto plan = std::make_shared<Broadcast>(plan_broadcast(name, a.dims(), b.dims()));
  const auto& va = a.value().storage();
  const auto& vb = b.value().storage();
  Tensor out(plan->out);
  auto od = out.data();
  const std::size_t n = od.size();
  for (std::size_t i = 0; i < n; ++i) od[i] = f(va[plan->a_index(i)], vb[plan->b_index(i)]);
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b},
                     [plan, ia, ib, dfx, dfy](const Tape& t, const Tensor& g, std::span<Tensor* const> grads) {
                       const auto& xa = t.value(ia).storage();
                       const auto& xb = t.value(ib).storage();
                       const std::size_t m = g.size();
                       if (grads[0]) {
                         auto ga = grads[0]->data();
                         for (std::size_t i = 0; i < m; ++i) {
                           const std::size_t j = plan->a_index(i), k = plan->b_index(i);
                           ga[j] += g[i] * dfx(xa[j], xb[k]);
                         }
                       }
                       if (grads[1]) {
                         auto gb = grads[1]->data();
                         for (std::size_t i = 0; i < m; ++i) {
                           const std::size_t j = plan->a_index(i), k = plan->b_index(i);
                           gb[k] += g[i] * dfy(xa[j], xb[k]);
                         }
                       }
                     });
}

// Elementwise unary map; df receives (x, y).
template <class F, class D>
Var unary(Var x, F f, D df) {
  const auto& vx = x.value().storage();
  Tensor out(x.dims());
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = f(vx[i]);
  const std::size_t ix = x.id();
  const std::size_t iy = x.tape().size();
  return x.tape().record(std::move(out), {x},
                         [ix, iy, df](const Tape& t, const Tensor& g, std::span<Tensor* const> grads) {
                           const auto& xv = t.value(ix).storage();
                           const auto& yv = t.value(iy).storage();
                           auto gx = grads[0]->data();
                           for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
                         });
}

std::size_t last_dim(const Var& x) { return x.dims().back(); }

}  // namespace

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var div(Var a, Var b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Var scale(Var x, double factor) {
  return unary(
      x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Var add_scalar(Var x, double offset) {
  return unary(
      x, [offset](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

Var sin(Var x) {
  return unary(
      x, [](double v) { return std::sin(v); }, [](double v, double) { return std::cos(v); });
}

Var cos(Var x) {
  return unary(
      x, [](double v) { return std::cos(v); }, [](double v, double) { return -std::sin(v); });
}

Var exp(Var x) {
  return unary(
      x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var x) {
  return unary(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var sqrt(Var x) {
  return unary(
      x, [](double v) { return std::sqrt(v); }, [](double, double y) { return 0.5 / y; });
}

Var gelu(Var x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  return unary(
      x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
      [](double v, double) {
        return 0.5 * (1.0 + std::erf(v * inv_sqrt2)) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
      });
}

Var matmul(Var a, Var b) {
  Tape& tape = same_tape("matmul", a, b);
  const Shape& da = a.dims();
  const Shape& db = b.dims();
  if (da.size() < 2 || db.size() < 2) shape_fail("matmul", da, db);
  const std::size_t m = da[da.size() - 2], k = da.back();
  const std::size_t kb = db[db.size() - 2], n = db.back();
  if (k != kb) shape_fail("matmul", da, db);
  const bool shared_b = db.size() == 2;
  if (!shared_b && !std::equal(da.begin(), da.end() - 2, db.begin(), db.end() - 2)) shape_fail("matmul", da, db);
  if (!shared_b && da.size() != db.size()) shape_fail("matmul", da, db);
  const std::size_t batch = shape_size(da) / (m * k);

  Shape out_dims(da.begin(), da.end() - 1);
  out_dims.push_back(n);
  Tensor out(out_dims);
  const double* pa = a.value().data().data();
  const double* pb = b.value().data().data();
  double* pc = out.data().data();
  for (std::size_t s = 0; s < batch; ++s) {
    const double* as = pa + s * m * k;
    const double* bs = shared_b ? pb : pb + s * k * n;
    double* cs = pc + s * m * n;
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = cs + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = as[i * k + p];
        const double* brow = bs + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b},
                     [=](const Tape& t, const Tensor& g, std::span<Tensor* const> grads) {
                       const double* xa = t.value(ia).data().data();
                       const double* xb = t.value(ib).data().data();
                       const double* pg = g.data().data();
                       for (std::size_t s = 0; s < batch; ++s) {
                         const double* as = xa + s * m * k;
                         const double* bs = shared_b ? xb : xb + s * k * n;
                         const double* gs = pg + s * m * n;
                         if (grads[0]) {
                           double* ga = grads[0]->data().data() + s * m * k;
                           for (std::size_t i = 0; i < m; ++i) {
                             const double* grow = gs + i * n;
                             for (std::size_t p = 0; p < k; ++p) {
                               const double* brow = bs + p * n;
                               double acc = 0.0;
                               for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                               ga[i * k + p] += acc;
                             }
                           }
                         }
                         if (grads[1]) {
                           double* gb = grads[1]->data().data() + (shared_b ? 0 : s * k * n);
                           for (std::size_t i = 0; i < m; ++i) {
                             const double* grow = gs + i * n;
                             for (std::size_t p = 0; p < k; ++p) {
                               const double aip = as[i * k + p];
                               double* gbrow = gb + p * n;
                               for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
                             }
                           }
                         }
                       }
                     });
}

Var transpose_last2(Var x) {
  const Shape& d = x.dims();
  if (d.size() < 2) throw ShapeError("transpose-last-two: rank < 2 in " + shape_string(d));
  const std::size_t r = d[d.size() - 2], c = d.back();
  const std::size_t batch = shape_size(d) / (r * c);
  Shape od = d;
  std::swap(od[od.size() - 2], od.back());
  Tensor out(od);
  const auto& v = x.value().storage();
  for (std::size_t s = 0; s < batch; ++s)
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out[s * r * c + j * r + i] = v[s * r * c + i * c + j];
  return x.tape().record(std::move(out), {x},
                         [=](const Tape&, const Tensor& g, std::span<Tensor* const> grads) {
                           auto gx = grads[0]->data();
                           for (std::size_t s = 0; s < batch; ++s)
                             for (std::size_t i = 0; i < r; ++i)
                               for (std::size_t j = 0; j < c; ++j)
                                 gx[s * r * c + i * c + j] += g[s * r * c + j * r + i];
                         });
}

Var reshape(Var x, Shape dims) {
  if (shape_size(dims) != x.value().size()) {
    throw ShapeError("reshape: " + shape_string(x.dims()) + " to " + shape_string(dims));
  }
  Tensor out(std::move(dims), x.value().storage());
  return x.tape().record(std::move(out), {x}, [](const Tape&, const Tensor& g, std::span<Tensor* const> grads) {
    auto gx = grads[0]->data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
  });
}

Var concat_last(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat-last-dim: no inputs");
  const Shape& first = parts[0].dims();
  const Shape lead(first.begin(), first.end() - 1);
  const std::size_t rows = shape_size(lead);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Shape& d = p.dims();
    if (&p.tape() != &parts[0].tape()) throw ContractError("concat-last-dim: operands on different tapes");
    if (d.size() != first.size() || !std::equal(lead.begin(), lead.end(), d.begin())) {
      shape_fail("concat-last-dim", first, d);
    }
    widths.push_back(d.back());
    total += d.back();
  }
  Shape od = lead;
  od.push_back(total);
  Tensor out(od);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& v = parts[k].value().storage();
    const std::size_t w = widths[k];
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(&v[r * w], w, &out[r * total + offset]);
    offset += w;
  }
  return parts[0].tape().record(
      std::move(out), std::vector<Var>(parts.begin(), parts.end()),
      [rows, total, widths](const Tape&, const Tensor& g, std::span<Tensor* const> grads) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < widths.size(); ++k) {
          const std::size_t w = widths[k];
          if (grads[k]) {
            auto gk = grads[k]->data();
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t j = 0; j < w; ++j) gk[r * w + j] += g[r * total + off + j];
          }
          off += w;
        }
      });
}

Var softmax_last(Var x) {
  const std::size_t n = last_dim(x);
  const std::size_t rows = x.value().size() / n;
  const auto& v = x.value().storage();
  Tensor out(x.dims());
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = &v[r * n];
    double* o = &out[r * n];
    const double mx = *std::max_element(in, in + n);
    if (mx == neg_inf) continue;  // fully masked row: all zeros
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < n; ++j) o[j] /= total;
  }
  const std::size_t iy = x.tape().size();
  return x.tape().record(std::move(out), {x},
                         [iy, n, rows](const Tape& t, const Tensor& g, std::span<Tensor* const> grads) {
                           const auto& y = t.value(iy).storage();
                           auto gx = grads[0]->data();
                           for (std::size_t r = 0; r < rows; ++r) {
                             double dot = 0.0;
                             for (std::size_t j = 0; j < n; ++j) dot += g[r * n + j] * y[r * n + j];
                             for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += y[r * n + j] * (g[r * n + j] - dot);
                           }
                         });
}

Var log_softmax_last(Var x) {
  const std::size_t n = last_dim(x);
  const std::size_t rows = x.value().size() / n;
  const auto& v = x.value().storage();
  Tensor out(x.dims());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = &v[r * n];
    const std::size_t arg = static_cast<std::size_t>(std::max_element(in, in + n) - in);
    const double mx = in[arg];
    double rest = 0.0;
    for (std::size_t j = 0; j < n; ++j) rest += j == arg ? 0.0 : std::exp(in[j] - mx);
    const double tail = std::log1p(rest);
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = (in[j] - mx) - tail;
  }
  const std::size_t iy = x.tape().size();
  return x.tape().record(std::move(out), {x},
                         [iy, n, rows](const Tape& t, const Tensor& g, std::span<Tensor* const> grads) {
                           const auto& y = t.value(iy).storage();
                           auto gx = grads[0]->data();
                           for (std::size_t r = 0; r < rows; ++r) {
                             double gsum = 0.0;
                             for (std::size_t j = 0; j < n; ++j) gsum += g[r * n + j];
                             for (std::size_t j = 0; j < n; ++j)
                               gx[r * n + j] += g[r * n + j] - std::exp(y[r * n + j]) * gsum;
                           }
                         });
}

Var layer_norm_last(Var x, double eps) {
  const std::size_t n = last_dim(x);
  const std::size_t rows = x.value().size() / n;
  const auto& v = x.value().storage();
  Tensor out(x.dims());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = &v[r * n];
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += in[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (in[j] - mean) * (in[j] - mean);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = (in[j] - mean) * is;
  }
  const std::size_t iy = x.tape().size();
  return x.tape().record(std::move(out), {x},
                         [iy, n, rows, inv_std](const Tape& t, const Tensor& g, std::span<Tensor* const> grads) {
                           const auto& y = t.value(iy).storage();
                           auto gx = grads[0]->data();
                           const double inv_n = 1.0 / static_cast<double>(n);
                           for (std::size_t r = 0; r < rows; ++r) {
                             double gmean = 0.0, gy = 0.0;
                             for (std::size_t j = 0; j < n; ++j) {
                               gmean += g[r * n + j];
                               gy += g[r * n + j] * y[r * n + j];
                             }
                             gmean *= inv_n;
                             gy *= inv_n;
                             const double is = (*inv_std)[r];
                             for (std::size_t j = 0; j < n; ++j)
                               gx[r * n + j] += is * (g[r * n + j] - gmean - y[r * n + j] * gy);
                           }
                         });
}

Var mean_last(Var x) {
  const std::size_t n = last_dim(x);
  const std::size_t rows = x.value().size() / n;
  Shape od = x.dims();
  od.back() = 1;
  Tensor out(od);
  const auto& v = x.value().storage();
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += v[r * n + j];
    out[r] = s / static_cast<double>(n);
  }
  return x.tape().record(std::move(out), {x}, [n, rows](const Tape&, const Tensor& g, std::span<Tensor* const> grads) {
    auto gx = grads[0]->data();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += g[r] * inv_n;
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().storage()) s += v;
  return x.tape().record(Tensor::scalar(s), {x}, [](const Tape&, const Tensor& g, std::span<Tensor* const> grads) {
    const double gv = g[0];
    for (double& v : grads[0]->data()) v += gv;
  });
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& d = x.dims();
  if (axis >= d.size() || begin >= end || end > d[axis]) {
    throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) + ") on axis " +
                     std::to_string(axis) + " of " + shape_string(d));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= d[i];
  for (std::size_t i = axis + 1; i < d.size(); ++i) inner *= d[i];
  const std::size_t span_in = d[axis] * inner;
  const std::size_t width = (end - begin) * inner;
  Shape od = d;
  od[axis] = end - begin;
  Tensor out(od);
  const auto& v = x.value().storage();
  for (std::size_t o = 0; o < outer; ++o) std::copy_n(&v[o * span_in + begin * inner], width, &out[o * width]);
  return x.tape().record(std::move(out), {x},
                         [=](const Tape&, const Tensor& g, std::span<Tensor* const> grads) {
                           auto gx = grads[0]->data();
                           for (std::size_t o = 0; o < outer; ++o)
                             for (std::size_t j = 0; j < width; ++j) gx[o * span_in + begin * inner + j] += g[o * width + j];
                         });
}

Var masked_fill(Var x, const Tensor& mask, double value) {
  if (mask.dims() != x.dims()) shape_fail("masked-fill", x.dims(), mask.dims());
  Tensor out = x.value();
  auto keep = std::make_shared<std::vector<char>>(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool fill = mask[i] != 0.0;
    (*keep)[i] = !fill;
    if (fill) out[i] = value;
  }
  return x.tape().record(std::move(out), {x}, [keep](const Tape&, const Tensor& g, std::span<Tensor* const> grads) {
    auto gx = grads[0]->data();
    for (std::size_t i = 0; i < gx.size(); ++i)
      if ((*keep)[i]) gx[i] += g[i];
  });
}

}  // namespace ops

Tensor primitive_suite(std::string_view op, std::span<const Tensor> inputs, const PrimitiveArgs& args) {
  auto need = [&](std::size_t n) {
    if (inputs.size() != n) {
      throw ContractError(std::string(op) + ": expected " + std::to_string(n) + " inputs, got " +
                          std::to_string(inputs.size()));
    }
  };
  Tape tape;
  auto in = [&](std::size_t i) { return tape.constant(inputs[i]); };
  Var out;
  if (op == "matmul") { need(2); out = ops::matmul(in(0), in(1)); }
  else if (op == "add") { need(2); out = ops::add(in(0), in(1)); }
  else if (op == "mul") { need(2); out = ops::mul(in(0), in(1)); }
  else if (op == "sub") { need(2); out = ops::sub(in(0), in(1)); }
  else if (op == "div") { need(2); out = ops::div(in(0), in(1)); }
  else if (op == "transpose-last-two") { need(1); out = ops::transpose_last2(in(0)); }
  else if (op == "reshape") { need(1); out = ops::reshape(in(0), args.dims); }
  else if (op == "concat-last-dim") {
    std::vector<Var> parts;
    for (std::size_t i = 0; i < inputs.size(); ++i) parts.push_back(in(i));
    out = ops::concat_last(parts);
  }
  else if (op == "softmax-last-dim") { need(1); out = ops::softmax_last(in(0)); }
  else if (op == "layer-norm-last-dim") { need(1); out = ops::layer_norm_last(in(0)); }
  else if (op == "gelu") { need(1); out = ops::gelu(in(0)); }
  else if (op == "sin") { need(1); out = ops::sin(in(0)); }
  else if (op == "cos") { need(1); out = ops::cos(in(0)); }
  else if (op == "exp") { need(1); out = ops::exp(in(0)); }
  else if (op == "log") { need(1); out = ops::log(in(0)); }
  else if (op == "sqrt") { need(1); out = ops::sqrt(in(0)); }
  else if (op == "mean-last-dim") { need(1); out = ops::mean_last(in(0)); }
  else if (op == "sum") { need(1); out = ops::sum(in(0)); }
  else if (op == "slice") { need(1); out = ops::slice(in(0), args.axis, args.begin, args.end); }
  else if (op == "masked-fill") { need(2); out = ops::masked_fill(in(0), inputs[1], args.fill); }
  else throw ContractError("primitive_suite: unknown op '" + std::string(op) + "'");
  return out.value();
}

}  // namespace naraim
