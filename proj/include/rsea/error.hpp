#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace rsea {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform for the named operation.
class ShapeError : public Error {
public:
    ShapeError(std::string op, std::string lhs, std::string rhs)
        : Error(op + ": shape mismatch " + lhs + " vs " + rhs),
          op_(std::move(op)), lhs_(std::move(lhs)), rhs_(std::move(rhs)) {}

    const std::string& op() const noexcept { return op_; }
    const std::string& lhs() const noexcept { return lhs_; }
    const std::string& rhs() const noexcept { return rhs_; }

private:
    std::string op_;
    std::string lhs_;
    std::string rhs_;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// NaN or Inf reached an operation.
class NonFiniteError : public Error {
public:
    explicit NonFiniteError(std::string op)
        : Error(op + ": non-finite value"), op_(std::move(op)) {}

    const std::string& op() const noexcept { return op_; }

private:
    std::string op_;
};

/// Misuse of the differentiation tape (non-scalar loss, double backward, ...).
class TapeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

enum class DatasetErrorKind {
    Parse,
    Io,
    InconsistentNodes,
    InconsistentViews,
    FeatureDimension,
    NegativeWeight,
    NonZeroDiagonal,
    NonSquare,
    LabelOutOfRange,
    MissingClass,
    Stratification,
};

const char* to_string(DatasetErrorKind kind) noexcept;

/// Dataset load/validation failure. `instance_id` is empty for file-level problems.
class DatasetError : public Error {
public:
    DatasetError(DatasetErrorKind kind, std::string instance_id, const std::string& detail)
        : Error(format(kind, instance_id, detail)), kind_(kind), instance_id_(std::move(instance_id)) {}

    DatasetErrorKind kind() const noexcept { return kind_; }
    const std::string& instance_id() const noexcept { return instance_id_; }

private:
    static std::string format(DatasetErrorKind kind, const std::string& id, const std::string& detail) {
        std::string msg = std::string("dataset error [") + to_string(kind) + "]";
        if (!id.empty()) msg += " in instance '" + id + "'";
        return msg + ": " + detail;
    }

    DatasetErrorKind kind_;
    std::string instance_id_;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(int epoch, const std::string& detail)
        : Error("training diverged at epoch " + std::to_string(epoch) + ": " + detail), epoch_(epoch) {}

    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

}  // namespace rsea
