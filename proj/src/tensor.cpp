#include "rsea/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "rsea/error.hpp"
#include "rsea/special.hpp"

namespace rsea {

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    return n;
}

// ---- Tensor ----------------------------------------------------------------

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), values_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_numel(shape_)) {
        throw ShapeError("Tensor", shape_str(shape_), "[" + std::to_string(values_.size()) + " values]");
    }
}

Tensor Tensor::vector(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor(Shape{n}, std::move(v));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> v;
    v.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("Tensor::matrix", "ragged rows", std::to_string(c));
        v.insert(v.end(), row.begin(), row.end());
    }
    return Tensor(Shape{r, c}, std::move(v));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t(Shape{n, n});
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw ShapeError("rows", shape_str(shape_), "rank 2");
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw ShapeError("cols", shape_str(shape_), "rank 2");
    return shape_[1];
}

double Tensor::item() const {
    if (values_.size() != 1) throw ShapeError("item", shape_str(shape_), "single element");
    return values_[0];
}

void Tensor::set_requires_grad(bool on) {
    requires_grad_ = on;
    if (on) {
        grad_.assign(values_.size(), 0.0);
    } else {
        grad_.clear();
    }
}

void Tensor::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

bool Tensor::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

// ---- Var / Tape --------------------------------------------------------------

const Tensor& Var::value() const {
    if (!tape_) throw TapeError("use of an unbound Var");
    return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->needs_grad(id_); }

Var Tape::constant(Tensor value) {
    if (!value.all_finite()) throw NonFiniteError("constant");
    nodes_.push_back(Node{"constant", std::move(value), false, nullptr, {}, {}});
    return Var(this, nodes_.size() - 1);
}

Var Tape::param(Tensor& param) {
    if (!param.all_finite()) throw NonFiniteError("param");
    if (!param.requires_grad()) param.set_requires_grad(true);
    nodes_.push_back(Node{"param", param, true, &param, {}, {}});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs, Backward backward) {
    bool needs = false;
    for (const Var& in : inputs) {
        if (in.tape() != this) throw TapeError(std::string(op) + ": operand recorded on a different tape");
        if (!nodes_[in.id()].value.all_finite()) throw NonFiniteError(std::string(op));
        needs = needs || nodes_[in.id()].needs_grad;
    }
    if (!value.all_finite()) throw NonFiniteError(std::string(op));
    if (consumed_) throw TapeError(std::string(op) + ": tape already consumed by backward");
    nodes_.push_back(Node{op, std::move(value), needs, nullptr, needs ? std::move(backward) : Backward{}, {}});
    return Var(this, nodes_.size() - 1);
}

std::vector<double>& Tape::grad(std::size_t id) {
    auto& node = nodes_[id];
    if (node.grad.size() != node.value.numel()) node.grad.assign(node.value.numel(), 0.0);
    return node.grad;
}

std::vector<std::string_view> Tape::op_names() const {
    std::vector<std::string_view> names;
    names.reserve(nodes_.size());
    for (const auto& n : nodes_) names.push_back(n.op);
    return names;
}

void Tape::backward(Var loss) {
    if (consumed_) throw TapeError("backward: tape already consumed; run a new forward pass");
    if (nodes_.empty()) throw TapeError("backward: empty tape");
    if (loss.tape() != this) throw TapeError("backward: loss belongs to a different tape");
    if (loss.value().numel() != 1) throw TapeError("backward: loss must be scalar, got " + shape_str(loss.shape()));
    consumed_ = true;
    if (!nodes_[loss.id()].needs_grad) return;

    grad(loss.id())[0] = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.needs_grad || node.grad.empty()) continue;
        if (node.param) {
            auto pg = node.param->grad();
            for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += node.grad[k];
        } else if (node.backward) {
            node.backward(*this, i);
        }
    }
}

// ---- helpers -----------------------------------------------------------------

namespace {

Tape& same_tape(std::string_view op, Var a, Var b) {
    if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
        throw TapeError(std::string(op) + ": operands must live on the same tape");
    }
    return *a.tape();
}

Tape& tape_of(std::string_view op, Var a) {
    if (!a.valid()) throw TapeError(std::string(op) + ": unbound operand");
    return *a.tape();
}

enum class Broadcast { None, Rows };

Broadcast check_elementwise(std::string_view op, const Shape& a, const Shape& b) {
    if (a == b) return Broadcast::None;
    if (!a.empty() && b.size() + 1 == a.size() && std::equal(b.begin(), b.end(), a.begin() + 1)) {
        return Broadcast::Rows;
    }
    throw ShapeError(std::string(op), shape_str(a), shape_str(b));
}

template <class Fwd, class DA, class DB>
Var binary(std::string_view op, Var a, Var b, Fwd fwd, DA da, DB db) {
    Tape& tape = same_tape(op, a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const Broadcast bc = check_elementwise(op, av.shape(), bv.shape());
    const std::size_t inner = bv.numel();
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out[i] = fwd(av[i], bv[bc == Broadcast::Rows ? i % inner : i]);
    }
    const std::size_t ia = a.id(), ib = b.id();
    return tape.record(op, std::move(out), {a, b}, [ia, ib, bc, inner, da, db](Tape& t, std::size_t self) {
        const Tensor& x = t.value(ia);
        const Tensor& y = t.value(ib);
        const auto& g = t.grad(self);
        if (t.needs_grad(ia)) {
            auto& ga = t.grad(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i] * da(x[i], y[bc == Broadcast::Rows ? i % inner : i]);
            }
        }
        if (t.needs_grad(ib)) {
            auto& gb = t.grad(ib);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const std::size_t j = bc == Broadcast::Rows ? i % inner : i;
                gb[j] += g[i] * db(x[i], y[j]);
            }
        }
    });
}

template <class Fwd, class Deriv>
Var unary(std::string_view op, Var a, Fwd fwd, Deriv deriv) {
    Tape& tape = tape_of(op, a);
    const Tensor& av = a.value();
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = fwd(av[i]);
    const std::size_t ia = a.id();
    return tape.record(op, std::move(out), {a}, [ia, deriv](Tape& t, std::size_t self) {
        const Tensor& x = t.value(ia);
        const Tensor& y = t.value(self);
        const auto& g = t.grad(self);
        auto& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv(x[i], y[i]);
    });
}

void require_matrix(std::string_view op, const Tensor& t) {
    if (t.rank() != 2) throw ShapeError(std::string(op), shape_str(t.shape()), "rank 2");
}

}  // namespace

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix("matmul", a);
    require_matrix("matmul", b);
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    if (b.rows() != k) throw ShapeError("matmul", shape_str(a.shape()), shape_str(b.shape()));
    Tensor out(Shape{n, m});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a(i, p);
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) out(i, j) += aip * b(p, j);
        }
    }
    return out;
}

// ---- ops ---------------------------------------------------------------------

Var matmul(Var a, Var b) {
    Tape& tape = same_tape("matmul", a, b);
    Tensor out = matmul(a.value(), b.value());
    const std::size_t ia = a.id(), ib = b.id();
    return tape.record("matmul", std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& x = t.value(ia);
        const Tensor& y = t.value(ib);
        const auto& g = t.grad(self);
        const std::size_t n = x.rows(), k = x.cols(), m = y.cols();
        if (t.needs_grad(ia)) {
            auto& gx = t.grad(ia);  // g * y^T
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < m; ++j) acc += g[i * m + j] * y(p, j);
                    gx[i * k + p] += acc;
                }
        }
        if (t.needs_grad(ib)) {
            auto& gy = t.grad(ib);  // x^T * g
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double xip = x(i, p);
                    for (std::size_t j = 0; j < m; ++j) gy[p * m + j] += xip * g[i * m + j];
                }
        }
    });
}

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

Var scale(Var a, double s) {
    return unary(
        "scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
    return unary(
        "add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var scale_by(Var a, Var s) {
    Tape& tape = same_tape("scale_by", a, s);
    if (s.value().numel() != 1) throw ShapeError("scale_by", shape_str(a.shape()), shape_str(s.shape()));
    const double k = s.value()[0];
    Tensor out = a.value();
    for (auto& v : out.values()) v *= k;
    const std::size_t ia = a.id(), is = s.id();
    return tape.record("scale_by", std::move(out), {a, s}, [ia, is](Tape& t, std::size_t self) {
        const Tensor& x = t.value(ia);
        const double k = t.value(is)[0];
        const auto& g = t.grad(self);
        if (t.needs_grad(ia)) {
            auto& gx = t.grad(ia);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * k;
        }
        if (t.needs_grad(is)) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * x[i];
            t.grad(is)[0] += acc;
        }
    });
}

Var relu(Var a) {
    return unary(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var softplus(Var a) {
    return unary(
        "softplus", a, [](double x) { return softplus(x); }, [](double x, double) { return sigmoid(x); });
}

Var sigmoid(Var a) {
    return unary(
        "sigmoid", a, [](double x) { return sigmoid(x); }, [](double, double y) { return y * (1.0 - y); });
}

Var digamma(Var a) {
    return unary(
        "digamma", a, [](double x) { return digamma(x); }, [](double x, double) { return trigamma(x); });
}

Var sqrt(Var a) {
    for (double v : a.value().values()) {
        if (v < 0.0) throw DomainError("sqrt: negative operand");
    }
    // Subgradient 0 at the origin keeps norms of all-zero parameters finite.
    return unary(
        "sqrt", a, [](double x) { return std::sqrt(x); },
        [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Var reciprocal(Var a) {
    for (double v : a.value().values()) {
        if (v == 0.0) throw DomainError("reciprocal: zero operand");
    }
    return unary(
        "reciprocal", a, [](double x) { return 1.0 / x; }, [](double, double y) { return -y * y; });
}

Var sum(Var a) {
    Tape& tape = tape_of("sum", a);
    double acc = 0.0;
    for (double v : a.value().values()) acc += v;
    const std::size_t ia = a.id();
    return tape.record("sum", Tensor::scalar(acc), {a}, [ia](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        for (auto& v : t.grad(ia)) v += g;
    });
}

Var sum_squares(Var a) {
    Tape& tape = tape_of("sum_squares", a);
    double acc = 0.0;
    for (double v : a.value().values()) acc += v * v;
    const std::size_t ia = a.id();
    return tape.record("sum_squares", Tensor::scalar(acc), {a}, [ia](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        const Tensor& x = t.value(ia);
        auto& gx = t.grad(ia);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += 2.0 * g * x[i];
    });
}

Var mean_axis(Var a, std::size_t axis) {
    Tape& tape = tape_of("mean_axis", a);
    const Shape& in = a.shape();
    if (axis >= in.size() || in[axis] == 0) {
        throw ShapeError("mean_axis", shape_str(in), "axis " + std::to_string(axis));
    }
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= in[d];
    for (std::size_t d = axis + 1; d < in.size(); ++d) inner *= in[d];
    const std::size_t len = in[axis];
    Shape out_shape;
    for (std::size_t d = 0; d < in.size(); ++d)
        if (d != axis) out_shape.push_back(in[d]);
    Tensor out(out_shape);
    const Tensor& x = a.value();
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t k = 0; k < len; ++k)
            for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += x[(o * len + k) * inner + i];
    for (auto& v : out.values()) v /= static_cast<double>(len);
    const std::size_t ia = a.id();
    return tape.record("mean_axis", std::move(out), {a}, [ia, outer, inner, len](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        auto& gx = t.grad(ia);
        const double w = 1.0 / static_cast<double>(len);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t k = 0; k < len; ++k)
                for (std::size_t i = 0; i < inner; ++i) gx[(o * len + k) * inner + i] += w * g[o * inner + i];
    });
}

namespace {

// Flat-index permutation for swapping two axes; perm[i] is the input index of output element i.
std::vector<std::size_t> swap_axes_index(const Shape& in, std::size_t a0, std::size_t a1, Shape& out_shape) {
    out_shape = in;
    std::swap(out_shape[a0], out_shape[a1]);
    const std::size_t n = shape_numel(in);
    const std::size_t rank = in.size();
    std::vector<std::size_t> in_stride(rank, 1);
    for (std::size_t d = rank; d-- > 1;) in_stride[d - 1] = in_stride[d] * in[d];
    std::vector<std::size_t> perm(n);
    std::vector<std::size_t> idx(rank, 0);
    for (std::size_t flat = 0; flat < n; ++flat) {
        // idx enumerates output coordinates in row-major order
        std::size_t src = 0;
        for (std::size_t d = 0; d < rank; ++d) {
            std::size_t in_axis = d == a0 ? a1 : (d == a1 ? a0 : d);
            src += idx[d] * in_stride[in_axis];
        }
        perm[flat] = src;
        for (std::size_t d = rank; d-- > 0;) {
            if (++idx[d] < out_shape[d]) break;
            idx[d] = 0;
        }
    }
    return perm;
}

}  // namespace

Var transpose(Var a, std::size_t axis0, std::size_t axis1) {
    Tape& tape = tape_of("transpose", a);
    const Shape& in = a.shape();
    if (axis0 >= in.size() || axis1 >= in.size()) {
        throw ShapeError("transpose", shape_str(in), "axes " + std::to_string(axis0) + "," + std::to_string(axis1));
    }
    Shape out_shape;
    auto perm = swap_axes_index(in, axis0, axis1, out_shape);
    Tensor out(out_shape);
    const Tensor& x = a.value();
    for (std::size_t i = 0; i < perm.size(); ++i) out[i] = x[perm[i]];
    const std::size_t ia = a.id();
    return tape.record("transpose", std::move(out), {a}, [ia, perm = std::move(perm)](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        auto& gx = t.grad(ia);
        for (std::size_t i = 0; i < perm.size(); ++i) gx[perm[i]] += g[i];
    });
}

Var row_variance(Var a) {
    Tape& tape = tape_of("row_variance", a);
    const Shape& in = a.shape();
    std::size_t rows = 0, cols = 0;
    if (in.size() == 1) {
        rows = 1;
        cols = in[0];
    } else if (in.size() == 2) {
        rows = in[0];
        cols = in[1];
    } else {
        throw ShapeError("row_variance", shape_str(in), "rank 1 or 2");
    }
    if (cols == 0) throw ShapeError("row_variance", shape_str(in), "non-empty rows");
    const Tensor& x = a.value();
    Tensor out(in.size() == 1 ? Shape{} : Shape{rows});
    std::vector<double> means(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double m = 0.0;
        for (std::size_t c = 0; c < cols; ++c) m += x[r * cols + c];
        m /= static_cast<double>(cols);
        double v = 0.0;
        for (std::size_t c = 0; c < cols; ++c) v += (x[r * cols + c] - m) * (x[r * cols + c] - m);
        means[r] = m;
        out[r] = v / static_cast<double>(cols);
    }
    const std::size_t ia = a.id();
    return tape.record("row_variance", std::move(out), {a},
                       [ia, rows, cols, means = std::move(means)](Tape& t, std::size_t self) {
                           const Tensor& x = t.value(ia);
                           const auto& g = t.grad(self);
                           auto& gx = t.grad(ia);
                           const double w = 2.0 / static_cast<double>(cols);
                           for (std::size_t r = 0; r < rows; ++r)
                               for (std::size_t c = 0; c < cols; ++c)
                                   gx[r * cols + c] += g[r] * w * (x[r * cols + c] - means[r]);
                       });
}

Var reshape(Var a, Shape shape) {
    Tape& tape = tape_of("reshape", a);
    if (shape_numel(shape) != a.value().numel()) throw ShapeError("reshape", shape_str(a.shape()), shape_str(shape));
    Tensor out(std::move(shape), a.value().data());
    const std::size_t ia = a.id();
    return tape.record("reshape", std::move(out), {a}, [ia](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        auto& gx = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
}

Var stack_columns(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("stack_columns", "[]", "at least one part");
    Tape& tape = tape_of("stack_columns", parts[0]);
    const std::size_t n = parts[0].value().numel();
    const std::size_t cols = parts.size();
    Tensor out(Shape{n, cols});
    for (std::size_t j = 0; j < cols; ++j) {
        if (parts[j].tape() != &tape) throw TapeError("stack_columns: operands must live on the same tape");
        const Tensor& p = parts[j].value();
        if (p.numel() != n) throw ShapeError("stack_columns", shape_str(parts[0].shape()), shape_str(p.shape()));
        for (std::size_t i = 0; i < n; ++i) out(i, j) = p[i];
    }
    std::vector<std::size_t> ids;
    for (const Var& v : parts) ids.push_back(v.id());
    return tape.record("stack_columns", std::move(out), parts, [ids, n, cols](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        for (std::size_t j = 0; j < cols; ++j) {
            if (!t.needs_grad(ids[j])) continue;
            auto& gp = t.grad(ids[j]);
            for (std::size_t i = 0; i < n; ++i) gp[i] += g[i * cols + j];
        }
    });
}

Var column(Var a, std::size_t j, Shape shape) {
    Tape& tape = tape_of("column", a);
    const Tensor& x = a.value();
    require_matrix("column", x);
    if (j >= x.cols() || shape_numel(shape) != x.rows()) {
        throw ShapeError("column", shape_str(x.shape()), shape_str(shape) + " col " + std::to_string(j));
    }
    const std::size_t rows = x.rows(), cols = x.cols();
    Tensor out(std::move(shape));
    for (std::size_t i = 0; i < rows; ++i) out[i] = x(i, j);
    const std::size_t ia = a.id();
    return tape.record("column", std::move(out), {a}, [ia, j, rows, cols](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        auto& gx = t.grad(ia);
        for (std::size_t i = 0; i < rows; ++i) gx[i * cols + j] += g[i];
    });
}

}  // namespace rsea
