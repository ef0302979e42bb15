#include "synthval/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "synthval/error.hpp"

namespace synthval {

SymmetricEigen symmetric_eigen(const Matrix& input, double tolerance, int max_sweeps) {
    const std::size_t n = input.rows();
    if (input.cols() != n) throw PreconditionError("eigen decomposition needs a square matrix");
    Matrix a = input;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    double norm = 0.0;
    for (double x : a.data()) norm += x * x;
    norm = std::sqrt(norm);
    const double threshold = tolerance * std::max(norm, 1e-300);

    SymmetricEigen out;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
        }
        if (off <= threshold) break;
        out.sweeps = sweep + 1;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) <= threshold * 1e-3) continue;
                // Rotation angle zeroing a(p, q).
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i] = a(order[i], order[i]);
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, i) = v(k, order[i]);
    }
    return out;
}

}  // namespace synthval
