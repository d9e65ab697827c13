#pragma once

// Dense row-major tensors and a single-use reverse-mode tape.
//
// Values flow forward through free functions (matmul, add, relu, ...) that
// record an adjoint closure on the owning Tape whenever an operand requires
// a gradient. Parameters live outside the tape as plain Tensors; Tape::param
// binds one as a leaf and Tape::backward accumulates into its grad buffer.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rsea {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

class Tensor {
public:
    /// Scalar zero (rank 0).
    Tensor() : values_(1, 0.0) {}
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }
    static Tensor vector(std::vector<double> v);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor identity(std::size_t n);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t numel() const noexcept { return values_.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    const std::vector<double>& data() const noexcept { return values_; }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * shape_[1] + c]; }
    double& operator()(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
    double item() const;

    bool requires_grad() const noexcept { return requires_grad_; }
    void set_requires_grad(bool on);
    std::span<const double> grad() const noexcept { return grad_; }
    std::span<double> grad() noexcept { return grad_; }
    void zero_grad();

    bool all_finite() const noexcept;

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.values_ == b.values_;
    }

private:
    Shape shape_;
    std::vector<double> values_;
    bool requires_grad_ = false;
    std::vector<double> grad_;
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    double item() const { return value().item(); }
    bool requires_grad() const;
    Tape* tape() const noexcept { return tape_; }
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    /// Adjoint of one recorded op: reads its own grad and pushes into inputs.
    using Backward = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// Leaf bound to `param`; backward() accumulates into param.grad().
    /// The parameter must outlive the tape.
    Var param(Tensor& param);

    void backward(Var loss);

    std::size_t size() const noexcept { return nodes_.size(); }
    bool consumed() const noexcept { return consumed_; }
    /// Names of recorded ops in execution order.
    std::vector<std::string_view> op_names() const;

    // Used by op implementations.
    Var record(std::string_view op, Tensor value, std::span<const Var> inputs, Backward backward);
    Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, Backward backward) {
        return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
    }
    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    /// Gradient buffer of a node; allocated lazily during backward.
    std::vector<double>& grad(std::size_t id);

private:
    struct Node {
        std::string_view op;
        Tensor value;
        bool needs_grad = false;
        Tensor* param = nullptr;
        Backward backward;
        std::vector<double> grad;
    };

    std::vector<Node> nodes_;
    bool consumed_ = false;
};

// ---- forward ops ----------------------------------------------------------
// Elementwise binary ops accept equal shapes, or a right operand whose shape
// equals the left shape with the leading axis dropped (broadcast over rows).

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// Multiplies every element of `a` by the single element of `s`.
Var scale_by(Var a, Var s);
Var relu(Var a);
Var softplus(Var a);
Var sigmoid(Var a);
Var digamma(Var a);
Var sqrt(Var a);
Var reciprocal(Var a);
Var sum(Var a);
Var sum_squares(Var a);
/// Mean along `axis`; the axis is removed from the result.
Var mean_axis(Var a, std::size_t axis);
/// Swaps two axes.
Var transpose(Var a, std::size_t axis0 = 0, std::size_t axis1 = 1);
/// Population variance of each row of a matrix (a vector counts as one row).
Var row_variance(Var a);
Var reshape(Var a, Shape shape);
/// Stacks equally-sized tensors as the columns of a (numel x count) matrix.
Var stack_columns(std::span<const Var> parts);
/// Column `j` of a matrix, reshaped to `shape`.
Var column(Var a, std::size_t j, Shape shape);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(Var a, double s) { return scale(a, s); }
inline Var operator*(double s, Var a) { return scale(a, s); }

// ---- value-level helpers (no tape) -----------------------------------------

double softplus(double x);
double sigmoid(double x);
Tensor matmul(const Tensor& a, const Tensor& b);

}  // namespace rsea
