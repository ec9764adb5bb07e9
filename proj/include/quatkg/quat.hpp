#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "quatkg/errors.hpp"

namespace quatkg {

/// An n-dimensional quaternion vector stored as four real component planes.
/// Coordinate d is the quaternion r[d] + i[d]*i + j[d]*j + k[d]*k.
struct QVec {
    std::vector<double> r, i, j, k;

    QVec() = default;
    explicit QVec(std::size_t n) : r(n, 0.0), i(n, 0.0), j(n, 0.0), k(n, 0.0) {}

    std::size_t size() const { return r.size(); }

    bool same_shape(const QVec& o) const { return size() == o.size(); }
};

/// Gradient w.r.t. a QVec; same layout.
using QGrad = QVec;

// Squared-norm floor used by normalize(); keeps zero coordinates finite
// without perturbing well-scaled ones.
inline constexpr double kNormFloor = 1e-12;

QVec hamilton(const QVec& q, const QVec& p);
QVec conjugate(const QVec& q);
QVec normalize(const QVec& q);
double qinner(const QVec& q, const QVec& p);

std::pair<QGrad, QGrad> hamilton_backward(const QVec& q, const QVec& p, const QGrad& upstream);
QGrad normalize_backward(const QVec& q, const QGrad& upstream);
std::pair<QGrad, QGrad> qinner_backward(const QVec& q, const QVec& p, double upstream);

/// dst += scale * src, coordinate-wise over all four planes.
void axpy(QVec& dst, const QVec& src, double scale = 1.0);

bool all_finite(const QVec& q);

} // namespace quatkg
