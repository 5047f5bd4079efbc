#pragma once

#include "cfhet/linalg.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cfhet {

/// Observations of the triangular model: response Y, scalar endogenous D,
/// exogenous block X (which always carries a constant) and instruments Z.
class Dataset {
public:
    Dataset(VectorXd y, VectorXd d, MatrixXd x, std::vector<std::string> x_labels, MatrixXd z,
            std::vector<std::string> z_labels, std::string y_label = "y", std::string d_label = "d");

    Eigen::Index n() const noexcept { return y_.size(); }
    Eigen::Index p_x() const noexcept { return x_.cols(); }
    Eigen::Index p_z() const noexcept { return z_.cols(); }

    const VectorXd& y() const noexcept { return y_; }
    const VectorXd& d() const noexcept { return d_; }
    const MatrixXd& x() const noexcept { return x_; }
    const MatrixXd& z() const noexcept { return z_; }
    const std::vector<std::string>& x_labels() const noexcept { return x_labels_; }
    const std::vector<std::string>& z_labels() const noexcept { return z_labels_; }
    const std::string& y_label() const noexcept { return y_label_; }
    const std::string& d_label() const noexcept { return d_label_; }

    /// X columns whose entries are not all identical (the intercept is excluded).
    std::vector<Eigen::Index> nonconstant_x_columns() const;

    DesignMatrix controls() const { return DesignMatrix(x_, x_labels_); }
    /// [D | X] in that order.
    DesignMatrix structural_design() const;
    /// [Z | X] in that order.
    DesignMatrix instrument_design() const;

    /// Copy with rows taken in the order given (repeats allowed).
    Dataset resample(std::span<const std::size_t> rows) const;
    /// Copy with Y and D replaced, keeping X and Z.
    Dataset with_outcomes(VectorXd y, VectorXd d) const;

private:
    VectorXd y_;
    VectorXd d_;
    MatrixXd x_;
    std::vector<std::string> x_labels_;
    MatrixXd z_;
    std::vector<std::string> z_labels_;
    std::string y_label_;
    std::string d_label_;
};

}  // namespace cfhet
