#pragma once

#include <vector>

#include "synthval/matrix.hpp"

namespace synthval {

struct SymmetricEigen {
    std::vector<double> values;  // descending
    Matrix vectors;              // column i is the unit eigenvector of values[i]
    int sweeps = 0;
};

// Cyclic Jacobi rotations until every off-diagonal entry is below
// `tolerance` times the Frobenius norm of the input. Requires a square
// symmetric matrix.
SymmetricEigen symmetric_eigen(const Matrix& a, double tolerance = 1e-15, int max_sweeps = 100);

}  // namespace synthval
