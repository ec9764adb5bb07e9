#include "quatkg/quat.hpp"

#include <cmath>

namespace quatkg {

namespace {

void check_same_shape(const QVec& q, const QVec& p, const char* op) {
    if (!q.same_shape(p)) {
        throw ShapeError(std::string(op) + ": dimension mismatch (" +
                         std::to_string(q.size()) + " vs " + std::to_string(p.size()) + ")");
    }
}

} // namespace

QVec hamilton(const QVec& q, const QVec& p) {
    check_same_shape(q, p, "hamilton");
    const std::size_t n = q.size();
    QVec out(n);
    for (std::size_t d = 0; d < n; ++d) {
        const double qr = q.r[d], qi = q.i[d], qj = q.j[d], qk = q.k[d];
        const double pr = p.r[d], pi = p.i[d], pj = p.j[d], pk = p.k[d];
        out.r[d] = qr * pr - qi * pi - qj * pj - qk * pk;
        out.i[d] = qi * pr + qr * pi - qk * pj + qj * pk;
        out.j[d] = qj * pr + qk * pi + qr * pj - qi * pk;
        out.k[d] = qk * pr - qj * pi + qi * pj + qr * pk;
    }
    return out;
}

QVec conjugate(const QVec& q) {
    const std::size_t n = q.size();
    QVec out(n);
    for (std::size_t d = 0; d < n; ++d) {
        out.r[d] = q.r[d];
        out.i[d] = -q.i[d];
        out.j[d] = -q.j[d];
        out.k[d] = -q.k[d];
    }
    return out;
}

QVec normalize(const QVec& q) {
    const std::size_t n = q.size();
    QVec out(n);
    for (std::size_t d = 0; d < n; ++d) {
        const double s = q.r[d] * q.r[d] + q.i[d] * q.i[d] + q.j[d] * q.j[d] + q.k[d] * q.k[d];
        const double inv = 1.0 / std::sqrt(std::max(s, kNormFloor));
        out.r[d] = q.r[d] * inv;
        out.i[d] = q.i[d] * inv;
        out.j[d] = q.j[d] * inv;
        out.k[d] = q.k[d] * inv;
    }
    return out;
}

double qinner(const QVec& q, const QVec& p) {
    check_same_shape(q, p, "qinner");
    const std::size_t n = q.size();
    double acc = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
        acc += q.r[d] * p.r[d] + q.i[d] * p.i[d] + q.j[d] * p.j[d] + q.k[d] * p.k[d];
    }
    return acc;
}

// L = sum(g . (q (x) p)).  Right multiplication by p is a linear map whose
// transpose is right multiplication by conj(p); likewise on the left.
std::pair<QGrad, QGrad> hamilton_backward(const QVec& q, const QVec& p, const QGrad& upstream) {
    check_same_shape(q, p, "hamilton_backward");
    check_same_shape(q, upstream, "hamilton_backward");
    return {hamilton(upstream, conjugate(p)), hamilton(conjugate(q), upstream)};
}

QGrad normalize_backward(const QVec& q, const QGrad& upstream) {
    check_same_shape(q, upstream, "normalize_backward");
    const std::size_t n = q.size();
    QGrad out(n);
    for (std::size_t d = 0; d < n; ++d) {
        const double s = q.r[d] * q.r[d] + q.i[d] * q.i[d] + q.j[d] * q.j[d] + q.k[d] * q.k[d];
        if (s > kNormFloor) {
            const double inv = 1.0 / std::sqrt(s);
            const double dot = upstream.r[d] * q.r[d] + upstream.i[d] * q.i[d] +
                               upstream.j[d] * q.j[d] + upstream.k[d] * q.k[d];
            const double scale = dot * inv * inv * inv;
            out.r[d] = upstream.r[d] * inv - q.r[d] * scale;
            out.i[d] = upstream.i[d] * inv - q.i[d] * scale;
            out.j[d] = upstream.j[d] * inv - q.j[d] * scale;
            out.k[d] = upstream.k[d] * inv - q.k[d] * scale;
        } else {
            // Below the floor the denominator is constant, so the map is linear.
            const double inv = 1.0 / std::sqrt(kNormFloor);
            out.r[d] = upstream.r[d] * inv;
            out.i[d] = upstream.i[d] * inv;
            out.j[d] = upstream.j[d] * inv;
            out.k[d] = upstream.k[d] * inv;
        }
    }
    return out;
}

std::pair<QGrad, QGrad> qinner_backward(const QVec& q, const QVec& p, double upstream) {
    check_same_shape(q, p, "qinner_backward");
    const std::size_t n = q.size();
    QGrad gq(n), gp(n);
    for (std::size_t d = 0; d < n; ++d) {
        gq.r[d] = upstream * p.r[d];
        gq.i[d] = upstream * p.i[d];
        gq.j[d] = upstream * p.j[d];
        gq.k[d] = upstream * p.k[d];
        gp.r[d] = upstream * q.r[d];
        gp.i[d] = upstream * q.i[d];
        gp.j[d] = upstream * q.j[d];
        gp.k[d] = upstream * q.k[d];
    }
    return {gq, gp};
}

void axpy(QVec& dst, const QVec& src, double scale) {
    check_same_shape(dst, src, "axpy");
    const std::size_t n = dst.size();
    for (std::size_t d = 0; d < n; ++d) {
        dst.r[d] += scale * src.r[d];
        dst.i[d] += scale * src.i[d];
        dst.j[d] += scale * src.j[d];
        dst.k[d] += scale * src.k[d];
    }
}

bool all_finite(const QVec& q) {
    for (std::size_t d = 0; d < q.size(); ++d) {
        if (!std::isfinite(q.r[d]) || !std::isfinite(q.i[d]) ||
            !std::isfinite(q.j[d]) || !std::isfinite(q.k[d])) {
            return false;
        }
    }
    return true;
}

} // namespace quatkg
