#pragma once

#include "error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mfscope {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = std::size_t;

/// N points in R^D stored row-major; row i is point i.
class PointCloud {
public:
    PointCloud() = default;

    explicit PointCloud(Matrix points, std::string provenance = {})
        : points_(std::move(points)), provenance_(std::move(provenance))
    {
        validate();
    }

    PointCloud(Matrix points, std::vector<std::int64_t> labels, std::string provenance)
        : points_(std::move(points)), labels_(std::move(labels)), provenance_(std::move(provenance))
    {
        validate();
    }

    Index size() const noexcept { return static_cast<Index>(points_.rows()); }
    Index dim() const noexcept { return static_cast<Index>(points_.cols()); }

    const Matrix& points() const noexcept { return points_; }
    auto point(Index i) const { return points_.row(static_cast<Eigen::Index>(i)); }

    const std::optional<std::vector<std::int64_t>>& labels() const noexcept { return labels_; }
    const std::string& provenance() const noexcept { return provenance_; }
    void set_provenance(std::string text) { provenance_ = std::move(text); }

    double squared_distance(Index i, Index j) const
    {
        return (point(i) - point(j)).squaredNorm();
    }

    double distance(Index i, Index j) const { return std::sqrt(squared_distance(i, j)); }

private:
    void validate() const
    {
        if (points_.rows() < 1 || points_.cols() < 1)
            throw Error(ErrorKind::empty_input, "point cloud needs N >= 1 and D >= 1");
        if (!points_.allFinite())
            throw Error(ErrorKind::invalid_spec, "point cloud has non-finite coordinates");
        if (labels_ && labels_->size() != size())
            throw Error(ErrorKind::invalid_spec, "label count does not match point count");
    }

    Matrix points_;
    std::optional<std::vector<std::int64_t>> labels_;
    std::string provenance_;
};

} // namespace mfscope
