#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace medrep {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

enum class RepresentationKind : std::uint8_t { Text = 0, Graph = 1 };

struct RepresentationMatrix {
    Matrix values;
    RepresentationKind kind = RepresentationKind::Text;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

bool all_finite(const Matrix& m);

}  // namespace medrep
