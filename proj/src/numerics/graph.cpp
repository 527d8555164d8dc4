#include "memsc/numerics/graph.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "memsc/kernels/kernels.hpp"

namespace memsc::numerics {

namespace ker = memsc::kernels;

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void softmax_row(const double* x, double* y, std::size_t n) {
    const double m = ker::vmax(x, n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = std::exp(x[i] - m);
        z += y[i];
    }
    const double inv = 1.0 / z;
    for (std::size_t i = 0; i < n; ++i) y[i] *= inv;
}

}  // namespace

Graph::Var Graph::make(Tensor val, bool needs_grad, std::function<void(Graph&)> back) {
    Node n;
    n.val = std::move(val);
    n.needs_grad = needs_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Graph::check_var(Var v) const {
    if (!v.valid() || v.idx >= nodes_.size()) throw std::invalid_argument("invalid graph variable");
}

Graph::Var Graph::constant(Tensor t) { return make(std::move(t), false, nullptr); }

Graph::Var Graph::input(Tensor t) { return make(std::move(t), true, nullptr); }

Graph::Var Graph::param(const ParameterSet& ps, const std::string& name) {
    Var v = make(ps.at(name), true, nullptr);
    param_vars_.emplace_back(name, v.idx);
    return v;
}

const Tensor& Graph::value(Var v) const {
    check_var(v);
    return nodes_[v.idx].val;
}

const Tensor& Graph::grad(Var v) const {
    check_var(v);
    if (!ran_backward_) throw std::logic_error("grad requested before backward()");
    return nodes_[v.idx].grad;
}

Graph::Var Graph::add(Var a, Var b) {
    check_var(a);
    check_var(b);
    const Tensor& ta = nodes_[a.idx].val;
    const Tensor& tb = nodes_[b.idx].val;
    require(ta.same_shape(tb), "add: shape mismatch");
    Tensor out = Tensor::zeros(ta.shape);
    ker::vadd(ta.data(), tb.data(), out.data(), out.numel());
    bool req = nodes_[a.idx].needs_grad || nodes_[b.idx].needs_grad;
    auto ai = a.idx, bi = b.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        if (g.nodes_[ai].needs_grad) ker::axpy(1.0, go.data(), g.grad_ref(ai).data(), go.numel());
        if (g.nodes_[bi].needs_grad) ker::axpy(1.0, go.data(), g.grad_ref(bi).data(), go.numel());
    }) : nullptr);
}

Graph::Var Graph::sub(Var a, Var b) {
    check_var(a);
    check_var(b);
    const Tensor& ta = nodes_[a.idx].val;
    const Tensor& tb = nodes_[b.idx].val;
    require(ta.same_shape(tb), "sub: shape mismatch");
    Tensor out = Tensor::zeros(ta.shape);
    ker::vsub(ta.data(), tb.data(), out.data(), out.numel());
    bool req = nodes_[a.idx].needs_grad || nodes_[b.idx].needs_grad;
    auto ai = a.idx, bi = b.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        if (g.nodes_[ai].needs_grad) ker::axpy(1.0, go.data(), g.grad_ref(ai).data(), go.numel());
        if (g.nodes_[bi].needs_grad) ker::axpy(-1.0, go.data(), g.grad_ref(bi).data(), go.numel());
    }) : nullptr);
}

Graph::Var Graph::mul(Var a, Var b) {
    check_var(a);
    check_var(b);
    const Tensor& ta = nodes_[a.idx].val;
    const Tensor& tb = nodes_[b.idx].val;
    require(ta.same_shape(tb), "mul: shape mismatch");
    Tensor out = Tensor::zeros(ta.shape);
    ker::vmul(ta.data(), tb.data(), out.data(), out.numel());
    bool req = nodes_[a.idx].needs_grad || nodes_[b.idx].needs_grad;
    auto ai = a.idx, bi = b.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        const std::size_t n = go.numel();
        if (g.nodes_[ai].needs_grad) {
            double* ga = g.grad_ref(ai).data();
            const double* vb = g.nodes_[bi].val.data();
            for (std::size_t i = 0; i < n; ++i) ga[i] += go.v[i] * vb[i];
        }
        if (g.nodes_[bi].needs_grad) {
            double* gb = g.grad_ref(bi).data();
            const double* va = g.nodes_[ai].val.data();
            for (std::size_t i = 0; i < n; ++i) gb[i] += go.v[i] * va[i];
        }
    }) : nullptr);
}

Graph::Var Graph::scale(Var a, double c) {
    check_var(a);
    Tensor out = nodes_[a.idx].val;
    ker::scal(c, out.data(), out.numel());
    bool req = nodes_[a.idx].needs_grad;
    auto ai = a.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        ker::axpy(c, go.data(), g.grad_ref(ai).data(), go.numel());
    }) : nullptr);
}

Graph::Var Graph::relu(Var a) {
    check_var(a);
    Tensor out = nodes_[a.idx].val;
    for (double& x : out.v) x = x > 0.0 ? x : 0.0;
    bool req = nodes_[a.idx].needs_grad;
    auto ai = a.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        const double* x = g.nodes_[ai].val.data();
        double* ga = g.grad_ref(ai).data();
        for (std::size_t i = 0; i < go.numel(); ++i)
            if (x[i] > 0.0) ga[i] += go.v[i];
    }) : nullptr);
}

Graph::Var Graph::log_elem(Var a) {
    check_var(a);
    Tensor out = nodes_[a.idx].val;
    for (double& x : out.v) x = std::log(std::max(x, 1e-300));
    bool req = nodes_[a.idx].needs_grad;
    auto ai = a.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        const double* x = g.nodes_[ai].val.data();
        double* ga = g.grad_ref(ai).data();
        for (std::size_t i = 0; i < go.numel(); ++i) ga[i] += go.v[i] / std::max(x[i], 1e-300);
    }) : nullptr);
}

Graph::Var Graph::neg(Var a) { return scale(a, -1.0); }

Graph::Var Graph::pick(Var vec, std::size_t i) {
    check_var(vec);
    const Tensor& t = nodes_[vec.idx].val;
    require(i < t.numel(), "pick: index out of range");
    bool req = nodes_[vec.idx].needs_grad;
    auto ai = vec.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(Tensor::scalar(t.v[i]), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        g.grad_ref(ai).v[i] += g.grad_ref(self).v[0];
    }) : nullptr);
}

Graph::Var Graph::sum(Var a) {
    check_var(a);
    const Tensor& t = nodes_[a.idx].val;
    bool req = nodes_[a.idx].needs_grad;
    auto ai = a.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(Tensor::scalar(ker::vsum(t.data(), t.numel())), req,
                req ? std::function<void(Graph&)>([=](Graph& g) {
                    const double go = g.grad_ref(self).v[0];
                    double* ga = g.grad_ref(ai).data();
                    for (std::size_t i = 0; i < g.nodes_[ai].val.numel(); ++i) ga[i] += go;
                }) : nullptr);
}

Graph::Var Graph::sum_rows(Var m) {
    check_var(m);
    const Tensor& t = nodes_[m.idx].val;
    require(t.rank() == 2, "sum_rows: rank-2 tensor required");
    const std::size_t r = t.rows(), c = t.cols();
    Tensor out = Tensor::zeros({c});
    for (std::size_t i = 0; i < r; ++i) ker::axpy(1.0, t.data() + i * c, out.data(), c);
    bool req = nodes_[m.idx].needs_grad;
    auto ai = m.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        double* ga = g.grad_ref(ai).data();
        for (std::size_t i = 0; i < r; ++i) ker::axpy(1.0, go.data(), ga + i * c, c);
    }) : nullptr);
}

Graph::Var Graph::row(Var m, std::size_t i) {
    check_var(m);
    const Tensor& t = nodes_[m.idx].val;
    require(t.rank() == 2, "row: rank-2 tensor required");
    require(i < t.rows(), "row: index out of range");
    const std::size_t c = t.cols();
    Tensor out = Tensor::from({c}, {t.v.begin() + i * c, t.v.begin() + (i + 1) * c});
    bool req = nodes_[m.idx].needs_grad;
    auto ai = m.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        ker::axpy(1.0, go.data(), g.grad_ref(ai).data() + i * c, c);
    }) : nullptr);
}

Graph::Var Graph::slice_cols(Var m, std::size_t c0, std::size_t c1) {
    check_var(m);
    const Tensor& t = nodes_[m.idx].val;
    require(t.rank() == 2, "slice_cols: rank-2 tensor required");
    require(c0 < c1 && c1 <= t.cols(), "slice_cols: bad column range");
    const std::size_t r = t.rows(), c = t.cols(), w = c1 - c0;
    Tensor out = Tensor::zeros({r, w});
    for (std::size_t i = 0; i < r; ++i)
        std::copy_n(t.data() + i * c + c0, w, out.data() + i * w);
    bool req = nodes_[m.idx].needs_grad;
    auto ai = m.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        double* ga = g.grad_ref(ai).data();
        for (std::size_t i = 0; i < r; ++i)
            ker::axpy(1.0, go.data() + i * w, ga + i * c + c0, w);
    }) : nullptr);
}

Graph::Var Graph::concat_cols(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat_cols: no inputs");
    std::size_t r = 0, total = 0;
    bool req = false;
    for (Var p : parts) {
        check_var(p);
        const Tensor& t = nodes_[p.idx].val;
        require(t.rank() == 2, "concat_cols: rank-2 tensors required");
        if (r == 0) r = t.rows();
        require(t.rows() == r, "concat_cols: row count mismatch");
        total += t.cols();
        req = req || nodes_[p.idx].needs_grad;
    }
    Tensor out = Tensor::zeros({r, total});
    std::size_t off = 0;
    for (Var p : parts) {
        const Tensor& t = nodes_[p.idx].val;
        for (std::size_t i = 0; i < r; ++i)
            std::copy_n(t.data() + i * t.cols(), t.cols(), out.data() + i * total + off);
        off += t.cols();
    }
    std::vector<std::uint32_t> idxs(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) idxs[i] = parts[i].idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        std::size_t col0 = 0;
        for (std::uint32_t pi : idxs) {
            const std::size_t w = g.nodes_[pi].val.cols();
            if (g.nodes_[pi].needs_grad) {
                double* gp = g.grad_ref(pi).data();
                for (std::size_t i = 0; i < r; ++i)
                    ker::axpy(1.0, go.data() + i * total + col0, gp + i * w, w);
            }
            col0 += w;
        }
    }) : nullptr);
}

Graph::Var Graph::stack_rows(const std::vector<Var>& rows) {
    require(!rows.empty(), "stack_rows: no inputs");
    std::size_t d = 0;
    bool req = false;
    for (Var r : rows) {
        check_var(r);
        const Tensor& t = nodes_[r.idx].val;
        require(t.rank() == 1, "stack_rows: rank-1 tensors required");
        if (d == 0) d = t.numel();
        require(t.numel() == d, "stack_rows: width mismatch");
        req = req || nodes_[r.idx].needs_grad;
    }
    Tensor out = Tensor::zeros({rows.size(), d});
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy_n(nodes_[rows[i].idx].val.data(), d, out.data() + i * d);
    std::vector<std::uint32_t> idxs(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) idxs[i] = rows[i].idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        for (std::size_t i = 0; i < idxs.size(); ++i)
            if (g.nodes_[idxs[i]].needs_grad)
                ker::axpy(1.0, go.data() + i * d, g.grad_ref(idxs[i]).data(), d);
    }) : nullptr);
}

Graph::Var Graph::reshape(Var a, std::vector<std::size_t> shape) {
    check_var(a);
    const Tensor& t = nodes_[a.idx].val;
    require(shape_numel(shape) == t.numel(), "reshape: element count mismatch");
    Tensor out;
    out.shape = std::move(shape);
    out.v = t.v;
    bool req = nodes_[a.idx].needs_grad;
    auto ai = a.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        ker::axpy(1.0, go.data(), g.grad_ref(ai).data(), go.numel());
    }) : nullptr);
}

Graph::Var Graph::dense(Var x, Var w, Var b) {
    check_var(x);
    check_var(w);
    check_var(b);
    const Tensor& tx = nodes_[x.idx].val;
    const Tensor& tw = nodes_[w.idx].val;
    const Tensor& tb = nodes_[b.idx].val;
    require(tw.rank() == 2, "dense: weight must be rank 2");
    const std::size_t dout = tw.rows(), din = tw.cols();
    require(tb.rank() == 1 && tb.numel() == dout, "dense: bias shape mismatch");
    require(tx.rank() == 1 || tx.rank() == 2, "dense: input must be rank 1 or 2");
    require(tx.cols() == din, "dense: input width mismatch");

    const std::size_t r = tx.rank() == 2 ? tx.rows() : 1;
    Tensor out = tx.rank() == 2 ? Tensor::zeros({r, dout}) : Tensor::zeros({dout});
    for (std::size_t i = 0; i < r; ++i) {
        double* yi = out.data() + i * dout;
        ker::gemv(tw.data(), tx.data() + i * din, yi, dout, din);
        ker::vadd(yi, tb.data(), yi, dout);
    }
    bool req = nodes_[x.idx].needs_grad || nodes_[w.idx].needs_grad || nodes_[b.idx].needs_grad;
    auto xi = x.idx, wi = w.idx, bi = b.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        const Tensor& vx = g.nodes_[xi].val;
        const Tensor& vw = g.nodes_[wi].val;
        for (std::size_t i = 0; i < r; ++i) {
            const double* gy = go.data() + i * dout;
            if (g.nodes_[xi].needs_grad)
                ker::gemv_t_acc(vw.data(), gy, g.grad_ref(xi).data() + i * din, dout, din);
            if (g.nodes_[wi].needs_grad)
                ker::ger_acc(g.grad_ref(wi).data(), 1.0, gy, vx.data() + i * din, dout, din);
            if (g.nodes_[bi].needs_grad) ker::axpy(1.0, gy, g.grad_ref(bi).data(), dout);
        }
    }) : nullptr);
}

Graph::Var Graph::matmul_nt(Var a, Var b) {
    check_var(a);
    check_var(b);
    const Tensor& ta = nodes_[a.idx].val;
    const Tensor& tb = nodes_[b.idx].val;
    require(ta.rank() == 2 && tb.rank() == 2, "matmul_nt: rank-2 tensors required");
    require(ta.cols() == tb.cols(), "matmul_nt: inner dimension mismatch");
    const std::size_t n = ta.rows(), m = tb.rows(), d = ta.cols();
    Tensor out = Tensor::zeros({n, m});
    for (std::size_t i = 0; i < n; ++i)
        ker::gemv(tb.data(), ta.data() + i * d, out.data() + i * m, m, d);
    bool req = nodes_[a.idx].needs_grad || nodes_[b.idx].needs_grad;
    auto ai = a.idx, bi = b.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        const Tensor& va = g.nodes_[ai].val;
        const Tensor& vb = g.nodes_[bi].val;
        for (std::size_t i = 0; i < n; ++i) {
            const double* gc = go.data() + i * m;
            if (g.nodes_[ai].needs_grad)
                ker::gemv_t_acc(vb.data(), gc, g.grad_ref(ai).data() + i * d, m, d);
            if (g.nodes_[bi].needs_grad)
                ker::ger_acc(g.grad_ref(bi).data(), 1.0, gc, va.data() + i * d, m, d);
        }
    }) : nullptr);
}

Graph::Var Graph::matmul_nn(Var a, Var b) {
    check_var(a);
    check_var(b);
    const Tensor& ta = nodes_[a.idx].val;
    const Tensor& tb = nodes_[b.idx].val;
    require(ta.rank() == 2 && tb.rank() == 2, "matmul_nn: rank-2 tensors required");
    require(ta.cols() == tb.rows(), "matmul_nn: inner dimension mismatch");
    const std::size_t n = ta.rows(), m = ta.cols(), d = tb.cols();
    Tensor out = Tensor::zeros({n, d});
    for (std::size_t i = 0; i < n; ++i)
        ker::gemv_t_acc(tb.data(), ta.data() + i * m, out.data() + i * d, m, d);
    bool req = nodes_[a.idx].needs_grad || nodes_[b.idx].needs_grad;
    auto ai = a.idx, bi = b.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        const Tensor& va = g.nodes_[ai].val;
        const Tensor& vb = g.nodes_[bi].val;
        for (std::size_t i = 0; i < n; ++i) {
            const double* gc = go.data() + i * d;
            if (g.nodes_[ai].needs_grad) {
                double* ga = g.grad_ref(ai).data() + i * m;
                for (std::size_t k = 0; k < m; ++k) ga[k] += ker::dot(vb.data() + k * d, gc, d);
            }
            if (g.nodes_[bi].needs_grad)
                ker::ger_acc(g.grad_ref(bi).data(), 1.0, va.data() + i * m, gc, m, d);
        }
    }) : nullptr);
}

Graph::Var Graph::softmax(Var a) {
    check_var(a);
    const Tensor& t = nodes_[a.idx].val;
    require(t.rank() == 1 || t.rank() == 2, "softmax: rank 1 or 2 required");
    const std::size_t r = t.rows(), c = t.cols();
    require(c >= 1, "softmax: empty input");
    Tensor out = Tensor::zeros(t.shape);
    for (std::size_t i = 0; i < r; ++i) softmax_row(t.data() + i * c, out.data() + i * c, c);
    bool req = nodes_[a.idx].needs_grad;
    auto ai = a.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        const Tensor& y = g.nodes_[self].val;
        double* ga = g.grad_ref(ai).data();
        for (std::size_t i = 0; i < r; ++i) {
            const double* yi = y.data() + i * c;
            const double* gi = go.data() + i * c;
            const double inner = ker::dot(gi, yi, c);
            for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += yi[j] * (gi[j] - inner);
        }
    }) : nullptr);
}

Graph::Var Graph::layer_norm(Var x, Var gain, Var shift) {
    check_var(x);
    check_var(gain);
    check_var(shift);
    const Tensor& t = nodes_[x.idx].val;
    const Tensor& tg = nodes_[gain.idx].val;
    const Tensor& ts = nodes_[shift.idx].val;
    require(t.rank() == 1 || t.rank() == 2, "layer_norm: rank 1 or 2 required");
    const std::size_t r = t.rows(), c = t.cols();
    require(tg.rank() == 1 && tg.numel() == c, "layer_norm: gain shape mismatch");
    require(ts.rank() == 1 && ts.numel() == c, "layer_norm: shift shape mismatch");

    Tensor out = Tensor::zeros(t.shape);
    // stash (xhat, inv_std) per row for the backward pass
    auto stash = std::make_shared<std::vector<double>>(r * c + r);
    for (std::size_t i = 0; i < r; ++i) {
        const double* xi = t.data() + i * c;
        const double mean = ker::vsum(xi, c) / static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double dv = xi[j] - mean;
            var += dv * dv;
        }
        var /= static_cast<double>(c);
        const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
        (*stash)[r * c + i] = inv_std;
        for (std::size_t j = 0; j < c; ++j) {
            const double xhat = (xi[j] - mean) * inv_std;
            (*stash)[i * c + j] = xhat;
            out.v[i * c + j] = tg.v[j] * xhat + ts.v[j];
        }
    }
    bool req = nodes_[x.idx].needs_grad || nodes_[gain.idx].needs_grad || nodes_[shift.idx].needs_grad;
    auto xi_ = x.idx, gi_ = gain.idx, si_ = shift.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        const Tensor& vg = g.nodes_[gi_].val;
        const double* xhat_all = stash->data();
        for (std::size_t i = 0; i < r; ++i) {
            const double* gy = go.data() + i * c;
            const double* xhat = xhat_all + i * c;
            const double inv_std = (*stash)[r * c + i];
            if (g.nodes_[gi_].needs_grad) {
                double* gg = g.grad_ref(gi_).data();
                for (std::size_t j = 0; j < c; ++j) gg[j] += gy[j] * xhat[j];
            }
            if (g.nodes_[si_].needs_grad) ker::axpy(1.0, gy, g.grad_ref(si_).data(), c);
            if (g.nodes_[xi_].needs_grad) {
                double m1 = 0.0, m2 = 0.0;  // mean(ghat), mean(ghat * xhat)
                for (std::size_t j = 0; j < c; ++j) {
                    const double gh = gy[j] * vg.v[j];
                    m1 += gh;
                    m2 += gh * xhat[j];
                }
                m1 /= static_cast<double>(c);
                m2 /= static_cast<double>(c);
                double* gx = g.grad_ref(xi_).data() + i * c;
                for (std::size_t j = 0; j < c; ++j) {
                    const double gh = gy[j] * vg.v[j];
                    gx[j] += (gh - m1 - xhat[j] * m2) * inv_std;
                }
            }
        }
    }) : nullptr);
}

Graph::Var Graph::embed(Var table, const std::vector<std::int32_t>& ids) {
    check_var(table);
    const Tensor& t = nodes_[table.idx].val;
    require(t.rank() == 2, "embed: table must be rank 2");
    require(!ids.empty(), "embed: empty id list");
    const std::size_t d = t.cols();
    for (std::int32_t id : ids)
        require(id >= 0 && static_cast<std::size_t>(id) < t.rows(), "embed: token id out of range");
    Tensor out = Tensor::zeros({ids.size(), d});
    for (std::size_t i = 0; i < ids.size(); ++i)
        std::copy_n(t.data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
    bool req = nodes_[table.idx].needs_grad;
    auto ti = table.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        double* gt = g.grad_ref(ti).data();
        for (std::size_t i = 0; i < ids.size(); ++i)
            ker::axpy(1.0, go.data() + i * d, gt + static_cast<std::size_t>(ids[i]) * d, d);
    }) : nullptr);
}

Graph::Var Graph::cross_entropy_with_logits(Var logits, std::size_t label) {
    check_var(logits);
    const Tensor& t = nodes_[logits.idx].val;
    require(t.rank() == 1, "cross_entropy_with_logits: rank-1 logits required");
    require(label < t.numel(), "cross_entropy_with_logits: label out of range");
    const std::size_t n = t.numel();
    auto probs = std::make_shared<std::vector<double>>(n);
    softmax_row(t.data(), probs->data(), n);
    const double m = ker::vmax(t.data(), n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += std::exp(t.v[i] - m);
    const double loss = m + std::log(z) - t.v[label];
    bool req = nodes_[logits.idx].needs_grad;
    auto li = logits.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(Tensor::scalar(loss), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const double go = g.grad_ref(self).v[0];
        double* gl = g.grad_ref(li).data();
        for (std::size_t i = 0; i < n; ++i) gl[i] += go * (*probs)[i];
        gl[label] -= go;
    }) : nullptr);
}

Graph::Var Graph::sum_squares(Var a) {
    check_var(a);
    const Tensor& t = nodes_[a.idx].val;
    const double loss = ker::dot(t.data(), t.data(), t.numel());
    bool req = nodes_[a.idx].needs_grad;
    auto ai = a.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(Tensor::scalar(loss), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const double go = g.grad_ref(self).v[0];
        ker::axpy(2.0 * go, g.nodes_[ai].val.data(), g.grad_ref(ai).data(),
                  g.nodes_[ai].val.numel());
    }) : nullptr);
}

Graph::Var Graph::mean_abs(Var a) {
    check_var(a);
    const Tensor& t = nodes_[a.idx].val;
    require(t.numel() > 0, "mean_abs: empty input");
    double acc = 0.0;
    for (double x : t.v) acc += std::abs(x);
    const double inv_n = 1.0 / static_cast<double>(t.numel());
    bool req = nodes_[a.idx].needs_grad;
    auto ai = a.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(Tensor::scalar(acc * inv_n), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const double go = g.grad_ref(self).v[0];
        const double* x = g.nodes_[ai].val.data();
        double* ga = g.grad_ref(ai).data();
        for (std::size_t i = 0; i < g.nodes_[ai].val.numel(); ++i)
            ga[i] += go * inv_n * (x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0));
    }) : nullptr);
}

Graph::Var Graph::power_normalize(Var x) {
    check_var(x);
    const Tensor& t = nodes_[x.idx].val;
    require(t.rank() == 1 && t.numel() % 2 == 0, "power_normalize: interleaved complex required");
    const std::size_t n = t.numel();
    const double half = static_cast<double>(n) / 2.0;
    const double norm = std::sqrt(ker::dot(t.data(), t.data(), n));
    if (norm < 1e-300) throw std::domain_error("power_normalize: all-zero input");
    const double c = std::sqrt(half);
    Tensor out = t;
    ker::scal(c / norm, out.data(), n);
    bool req = nodes_[x.idx].needs_grad;
    auto ai = x.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        const double* xv = g.nodes_[ai].val.data();
        const double xg = ker::dot(xv, go.data(), n);
        double* ga = g.grad_ref(ai).data();
        const double s = c / norm;
        const double k = xg / (norm * norm);
        for (std::size_t i = 0; i < n; ++i) ga[i] += s * (go.v[i] - xv[i] * k);
    }) : nullptr);
}

Graph::Var Graph::complex_affine(Var x, const Tensor& scale_ri, const Tensor& offset_ri) {
    check_var(x);
    const Tensor& t = nodes_[x.idx].val;
    require(t.rank() == 1 && t.numel() % 2 == 0, "complex_affine: interleaved complex required");
    require(scale_ri.numel() == t.numel() && offset_ri.numel() == t.numel(),
            "complex_affine: length mismatch");
    const std::size_t pairs = t.numel() / 2;
    Tensor out = Tensor::zeros(t.shape);
    for (std::size_t k = 0; k < pairs; ++k) {
        const double xr = t.v[2 * k], xi = t.v[2 * k + 1];
        const double sr = scale_ri.v[2 * k], si = scale_ri.v[2 * k + 1];
        out.v[2 * k] = sr * xr - si * xi + offset_ri.v[2 * k];
        out.v[2 * k + 1] = sr * xi + si * xr + offset_ri.v[2 * k + 1];
    }
    bool req = nodes_[x.idx].needs_grad;
    auto ai = x.idx;
    auto s = std::make_shared<Tensor>(scale_ri);
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        double* ga = g.grad_ref(ai).data();
        for (std::size_t k = 0; k < pairs; ++k) {
            const double gr = go.v[2 * k], gi = go.v[2 * k + 1];
            const double sr = s->v[2 * k], si = s->v[2 * k + 1];
            ga[2 * k] += sr * gr + si * gi;       // conj(s) * g, real part
            ga[2 * k + 1] += sr * gi - si * gr;   // conj(s) * g, imag part
        }
    }) : nullptr);
}

Graph::Var Graph::hard_mask_st(Var scores, const std::vector<std::uint8_t>& mask, double kappa,
                               std::size_t threshold_index, double temperature) {
    check_var(scores);
    const Tensor& t = nodes_[scores.idx].val;
    require(t.rank() == 1, "hard_mask_st: rank-1 scores required");
    require(mask.size() == t.numel(), "hard_mask_st: mask length mismatch");
    require(threshold_index < t.numel(), "hard_mask_st: threshold index out of range");
    require(temperature > 0.0, "hard_mask_st: temperature must be positive");
    const std::size_t n = t.numel();
    Tensor out = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i) out.v[i] = mask[i] ? 1.0 : 0.0;
    bool req = nodes_[scores.idx].needs_grad;
    auto ai = scores.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        const double* p = g.nodes_[ai].val.data();
        double* ga = g.grad_ref(ai).data();
        double through_kappa = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sig = 1.0 / (1.0 + std::exp(-(p[i] - kappa) / temperature));
            const double slope = go.v[i] * sig * (1.0 - sig) / temperature;
            ga[i] += slope;
            through_kappa += slope;
        }
        // kappa is the threshold element's own score
        ga[threshold_index] -= through_kappa;
    }) : nullptr);
}

Graph::Var Graph::expand_pairs(Var per_complex) {
    check_var(per_complex);
    const Tensor& t = nodes_[per_complex.idx].val;
    require(t.rank() == 1, "expand_pairs: rank-1 input required");
    const std::size_t n = t.numel();
    Tensor out = Tensor::zeros({2 * n});
    for (std::size_t i = 0; i < n; ++i) out.v[2 * i] = out.v[2 * i + 1] = t.v[i];
    bool req = nodes_[per_complex.idx].needs_grad;
    auto ai = per_complex.idx;
    std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
    return make(std::move(out), req, req ? std::function<void(Graph&)>([=](Graph& g) {
        const Tensor& go = g.grad_ref(self);
        double* ga = g.grad_ref(ai).data();
        for (std::size_t i = 0; i < n; ++i) ga[i] += go.v[2 * i] + go.v[2 * i + 1];
    }) : nullptr);
}

void Graph::backward(Var loss) {
    check_var(loss);
    if (ran_backward_) throw std::logic_error("backward() already ran on this graph");
    const Tensor& lv = nodes_[loss.idx].val;
    if (lv.numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
    if (!std::isfinite(lv.v[0])) throw std::runtime_error("backward: non-finite loss value");
    for (Node& n : nodes_)
        if (n.needs_grad) n.grad = Tensor::zeros(n.val.shape);
    ran_backward_ = true;
    if (!nodes_[loss.idx].needs_grad) return;
    nodes_[loss.idx].grad.v[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (n.needs_grad && n.back) n.back(*this);
    }
}

GradientSet Graph::extract_gradients(const ParameterSet& ps) const {
    if (!ran_backward_) throw std::logic_error("extract_gradients before backward()");
    GradientSet gs(ps);
    for (const auto& [name, idx] : param_vars_) {
        const Tensor& g = nodes_[idx].grad;
        if (g.numel() == 0) continue;  // parameter bound but unused
        Tensor& dst = gs.at(name);
        ker::vadd(dst.data(), g.data(), dst.data(), dst.numel());
    }
    return gs;
}

Graph::Var attention(Graph& g, Graph::Var queries, Graph::Var keys, Graph::Var values,
                     std::size_t heads) {
    const Tensor& q = g.value(queries);
    const Tensor& k = g.value(keys);
    const Tensor& v = g.value(values);
    require(q.rank() == 2 && k.rank() == 2 && v.rank() == 2, "attention: rank-2 inputs required");
    const std::size_t d = q.cols();
    require(k.cols() == d && v.cols() == d, "attention: width mismatch");
    require(k.rows() == v.rows(), "attention: key/value count mismatch");
    require(heads >= 1 && d % heads == 0, "attention: heads must divide width");
    const std::size_t dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    std::vector<Graph::Var> outs;
    outs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        Graph::Var qh = g.slice_cols(queries, h * dh, (h + 1) * dh);
        Graph::Var kh = g.slice_cols(keys, h * dh, (h + 1) * dh);
        Graph::Var vh = g.slice_cols(values, h * dh, (h + 1) * dh);
        Graph::Var weights = g.softmax(g.scale(g.matmul_nt(qh, kh), scale));
        outs.push_back(g.matmul_nn(weights, vh));
    }
    return heads == 1 ? outs[0] : g.concat_cols(outs);
}

}  // namespace memsc::numerics
