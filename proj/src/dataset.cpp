#include "cfhet/dataset.hpp"

#include "cfhet/errors.hpp"

#include <unordered_set>

namespace cfhet {

Dataset::Dataset(VectorXd y, VectorXd d, MatrixXd x, std::vector<std::string> x_labels, MatrixXd z,
                 std::vector<std::string> z_labels, std::string y_label, std::string d_label)
    : y_(std::move(y)),
      d_(std::move(d)),
      x_(std::move(x)),
      x_labels_(std::move(x_labels)),
      z_(std::move(z)),
      z_labels_(std::move(z_labels)),
      y_label_(std::move(y_label)),
      d_label_(std::move(d_label)) {
    const Eigen::Index n = y_.size();
    if (n < 1) throw InvalidArgument("dataset is empty");
    if (d_.size() != n || x_.rows() != n || z_.rows() != n) {
        throw InvalidArgument("dataset blocks have inconsistent row counts");
    }
    if (x_.cols() < 1) throw InvalidArgument("exogenous block X must contain a constant column");
    if (z_.cols() < 1) throw InvalidArgument("at least one instrument column is required");
    if (static_cast<Eigen::Index>(x_labels_.size()) != x_.cols() ||
        static_cast<Eigen::Index>(z_labels_.size()) != z_.cols()) {
        throw InvalidArgument("dataset label counts do not match column counts");
    }
    std::unordered_set<std::string> seen{y_label_, d_label_};
    if (seen.size() != 2) throw InvalidArgument("response and endogenous labels coincide");
    for (const auto* labels : {&x_labels_, &z_labels_}) {
        for (const auto& label : *labels) {
            if (!seen.insert(label).second) throw InvalidArgument("column '" + label + "' used twice");
        }
    }
    if (!y_.allFinite() || !d_.allFinite() || !x_.allFinite() || !z_.allFinite()) {
        throw NonFiniteInput("dataset contains non-finite values");
    }
    if (!controls().constant_column()) {
        throw InvalidArgument("exogenous block X must contain a constant column");
    }
}

std::vector<Eigen::Index> Dataset::nonconstant_x_columns() const {
    std::vector<Eigen::Index> out;
    for (Eigen::Index j = 0; j < x_.cols(); ++j) {
        if (!(x_.col(j).array() == x_(0, j)).all()) out.push_back(j);
    }
    return out;
}

DesignMatrix Dataset::structural_design() const {
    MatrixXd values(n(), 1 + p_x());
    values << d_, x_;
    std::vector<std::string> labels{d_label_};
    labels.insert(labels.end(), x_labels_.begin(), x_labels_.end());
    return DesignMatrix(std::move(values), std::move(labels));
}

DesignMatrix Dataset::instrument_design() const {
    MatrixXd values(n(), p_z() + p_x());
    values << z_, x_;
    std::vector<std::string> labels = z_labels_;
    labels.insert(labels.end(), x_labels_.begin(), x_labels_.end());
    return DesignMatrix(std::move(values), std::move(labels));
}

Dataset Dataset::resample(std::span<const std::size_t> rows) const {
    const auto m = static_cast<Eigen::Index>(rows.size());
    VectorXd y(m), d(m);
    MatrixXd x(m, p_x()), z(m, p_z());
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto src = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
        if (src >= n()) throw InvalidArgument("resample index out of range");
        y(i) = y_(src);
        d(i) = d_(src);
        x.row(i) = x_.row(src);
        z.row(i) = z_.row(src);
    }
    return Dataset(std::move(y), std::move(d), std::move(x), x_labels_, std::move(z), z_labels_,
                   y_label_, d_label_);
}

Dataset Dataset::with_outcomes(VectorXd y, VectorXd d) const {
    return Dataset(std::move(y), std::move(d), x_, x_labels_, z_, z_labels_, y_label_, d_label_);
}

}  // namespace cfhet
