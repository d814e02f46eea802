#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace extdef {

/// Marginal scale of an observation matrix.
enum class Scale { Raw, Uniform, Exponential, Frechet, Gaussian };

std::string to_string(Scale s);

/// N x d observations; rows are time, columns follow a SiteSet order.
struct ObservationMatrix {
    Eigen::MatrixXd values;
    Scale scale = Scale::Raw;
    std::vector<std::string> site_ids;

    Eigen::Index n() const { return values.rows(); }
    Eigen::Index d() const { return values.cols(); }

    /// Enforces finiteness, shape and per-scale range invariants.
    void validate() const;

    /// Copy relabelled as raw data, for feeding simulator output into the
    /// same rank-based pipeline used for files on disk.
    ObservationMatrix as_raw() const;
};

/// Per-column average ranks (1-based; ties share their average rank).
Eigen::VectorXd average_ranks(const Eigen::VectorXd& column);

/// Site-wise empirical transform. Values with rank r map to u = r/(N+1),
/// then to the target scale: exponential -log(1-u), Frechet -1/log(u),
/// Gaussian score norm_quantile(u). Input must be raw or uniform; constant
/// columns are rejected.
ObservationMatrix rank_transform(const ObservationMatrix& obs, Scale target);

/// Rank transform that also accepts already-exponential input (returned
/// unchanged); used by model fitting.
ObservationMatrix to_exponential_margins(const ObservationMatrix& obs);

}  // namespace extdef
