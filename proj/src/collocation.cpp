#include "dynramp/collocation.hpp"

#include <cmath>

namespace dynramp {

namespace {

// Shifted Legendre polynomial coefficients (monomial basis on [0,1]).
std::vector<double> shifted_legendre(int n) {
    // P_0 = 1, P_1 = 2t-1, (k+1) P_{k+1} = (2k+1)(2t-1) P_k - k P_{k-1}
    std::vector<double> pm1{1.0};
    if (n == 0) return pm1;
    std::vector<double> p{-1.0, 2.0};
    for (int k = 1; k < n; ++k) {
        std::vector<double> next(k + 2, 0.0);
        for (int i = 0; i <= k; ++i) {
            next[i + 1] += (2.0 * k + 1.0) * 2.0 * p[i];
            next[i] += (2.0 * k + 1.0) * -1.0 * p[i];
        }
        for (std::size_t i = 0; i < pm1.size(); ++i) next[i] -= k * pm1[i];
        for (auto& c : next) c /= (k + 1.0);
        pm1 = p;
        p = next;
    }
    return p;
}

double poly_eval(const std::vector<double>& c, double t) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * t + c[i];
    return v;
}

std::vector<double> poly_deriv(const std::vector<double>& c) {
    if (c.size() <= 1) return {0.0};
    std::vector<double> d(c.size() - 1);
    for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = c[i] * static_cast<double>(i);
    return d;
}

// Deflate a known root r: c(t) = (t - r) q(t).
std::vector<double> poly_deflate(const std::vector<double>& c, double r) {
    std::vector<double> q(c.size() - 1, 0.0);
    double carry = c.back();
    for (std::size_t i = c.size() - 1; i-- > 0;) {
        q[i] = carry;
        carry = c[i] + r * carry;
    }
    return q;
}

}  // namespace

CollocationScheme radau_scheme(int K) {
    if (K < 1 || K > 6) throw CollocationError("supported collocation orders are 1..6");
    CollocationScheme s;
    s.K = K;

    // Nodes: roots of P~K - P~{K-1} on (0,1]; t = 1 is always a root.
    std::vector<double> pk = shifted_legendre(K);
    std::vector<double> pk1 = shifted_legendre(K - 1);
    std::vector<double> poly(pk.size(), 0.0);
    for (std::size_t i = 0; i < pk.size(); ++i) poly[i] = pk[i];
    for (std::size_t i = 0; i < pk1.size(); ++i) poly[i] -= pk1[i];

    std::vector<double> inner = poly_deflate(poly, 1.0);
    std::vector<double> roots;
    // The remaining K-1 roots are real, simple, and lie in (0,1): bracket by
    // sign scanning, then bisect and polish with Newton.
    auto dinner = poly_deriv(inner);
    const int scan = 4096;
    double prev_t = 0.0, prev_v = poly_eval(inner, 0.0);
    for (int i = 1; i <= scan && static_cast<int>(roots.size()) < K - 1; ++i) {
        double t = static_cast<double>(i) / scan;
        double v = poly_eval(inner, t);
        if (prev_v == 0.0) roots.push_back(prev_t);
        else if (prev_v * v < 0.0) {
            double a = prev_t, b = t;
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (a + b);
                double vm = poly_eval(inner, mid);
                if (vm == 0.0) {
                    a = b = mid;
                    break;
                }
                if (vm * poly_eval(inner, a) < 0.0) b = mid;
                else a = mid;
                if (b - a < 1e-16) break;
            }
            double r = 0.5 * (a + b);
            for (int it = 0; it < 8; ++it) {
                double f = poly_eval(inner, r), df = poly_eval(dinner, r);
                if (df == 0.0) break;
                r -= f / df;
            }
            roots.push_back(r);
        }
        prev_t = t;
        prev_v = v;
    }
    if (static_cast<int>(roots.size()) != K - 1)
        throw CollocationError("failed to isolate the collocation nodes");
    roots.push_back(1.0);
    s.nodes = roots;

    // Lagrange differentiation over the extended set {0} + nodes.
    std::vector<double> pts{0.0};
    pts.insert(pts.end(), roots.begin(), roots.end());
    const std::size_t m = pts.size();
    s.deriv.assign(m, std::vector<double>(K, 0.0));
    for (std::size_t j = 0; j < m; ++j) {
        for (int i = 0; i < K; ++i) {
            double sum = 0.0;
            for (std::size_t l = 0; l < m; ++l) {
                if (l == j) continue;
                double prod = 1.0 / (pts[j] - pts[l]);
                for (std::size_t q = 0; q < m; ++q)
                    if (q != j && q != l) prod *= (pts[i + 1] - pts[q]) / (pts[j] - pts[q]);
                sum += prod;
            }
            s.deriv[j][i] = sum;
        }
    }

    // Quadrature weights over the K nodes from the moment equations
    // sum_i w_i tau_i^p = 1/(p+1); the Radau choice of nodes lifts the
    // exactness from K-1 to 2K-2.
    {
        std::vector<std::vector<double>> A(K, std::vector<double>(K));
        std::vector<double> b(K);
        for (int p = 0; p < K; ++p) {
            for (int i = 0; i < K; ++i) A[p][i] = std::pow(s.nodes[i], p);
            b[p] = 1.0 / (p + 1.0);
        }
        for (int col = 0; col < K; ++col) {
            int piv = col;
            for (int r = col + 1; r < K; ++r)
                if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
            std::swap(A[piv], A[col]);
            std::swap(b[piv], b[col]);
            for (int r = col + 1; r < K; ++r) {
                double f = A[r][col] / A[col][col];
                for (int c = col; c < K; ++c) A[r][c] -= f * A[col][c];
                b[r] -= f * b[col];
            }
        }
        for (int i = K; i-- > 0;) {
            for (int c = i + 1; c < K; ++c) b[i] -= A[i][c] * b[c];
            b[i] /= A[i][i];
        }
        s.quad = b;
    }
    return s;
}

double CollocationScheme::integrate(double v0, const std::vector<double>& vnodes) const {
    (void)v0;  // the K-point Radau rule does not weight the left endpoint
    double acc = 0.0;
    for (int i = 0; i < K; ++i) acc += quad[i] * vnodes[i];
    return acc;
}

namespace {

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

}  // namespace

ChainMap chain_value(int delta, int m, double s) {
    ChainMap map;
    map.phi_coef.assign(delta, 0.0);
    if (delta == 0) {
        // rho == nu directly
        map.nu_coef = (m == 0) ? 1.0 : 0.0;
        return map;
    }
    for (int j = m; j < delta; ++j)
        map.phi_coef[j] = std::pow(s, j - m) / factorial(j - m);
    map.nu_coef = std::pow(s, delta - m) / factorial(delta - m);
    return map;
}

ChainMap chain_integral(int delta, double s) {
    ChainMap map;
    map.phi_coef.assign(delta, 0.0);
    if (delta == 0) {
        map.nu_coef = s;
        return map;
    }
    for (int j = 0; j < delta; ++j)
        map.phi_coef[j] = std::pow(s, j + 1) / factorial(j + 1);
    map.nu_coef = std::pow(s, delta + 1) / factorial(delta + 1);
    return map;
}

ChainMap chain_integral2(int delta, double s) {
    ChainMap map;
    map.phi_coef.assign(delta, 0.0);
    if (delta == 0) {
        map.nu_coef = s * s / 2.0;
        return map;
    }
    for (int j = 0; j < delta; ++j)
        map.phi_coef[j] = std::pow(s, j + 2) / factorial(j + 2);
    map.nu_coef = std::pow(s, delta + 2) / factorial(delta + 2);
    return map;
}

DiscretizedChain discretize_chain(int delta, int horizon_hours, int elements_per_hour,
                                  const CollocationScheme& scheme) {
    if (delta < 0) throw CollocationError("delta must be >= 0");
    if (horizon_hours < 1) throw CollocationError("horizon must be at least 1 hour");
    if (elements_per_hour < 1) throw CollocationError("need at least 1 element per hour");
    DiscretizedChain c;
    c.delta = delta;
    c.hours = horizon_hours;
    c.elements_per_hour = elements_per_hour;
    c.scheme = scheme;
    const double h = 1.0 / elements_per_hour;
    for (int hour = 0; hour < horizon_hours; ++hour)
        for (int e = 0; e < elements_per_hour; ++e)
            for (int i = 0; i < scheme.K; ++i)
                c.node_times.push_back(hour + (e + scheme.nodes[i]) * h);
    return c;
}

std::vector<std::vector<double>> DiscretizedChain::solve_nodes(
    const std::vector<double>& nu_per_hour, const std::vector<double>& phi0) const {
    if (static_cast<int>(phi0.size()) != delta)
        throw CollocationError("phi0 must have delta entries");
    if (static_cast<int>(nu_per_hour.size()) != hours)
        throw CollocationError("need one nu per hour");
    const int K = scheme.K;
    const double h = 1.0 / elements_per_hour;

    std::vector<std::vector<double>> out(std::max(delta, 1));
    if (delta == 0) {
        // rho is the per-hour-constant nu itself.
        for (int hour = 0; hour < hours; ++hour)
            for (int e = 0; e < elements_per_hour; ++e)
                for (int i = 0; i < K; ++i) out[0].push_back(nu_per_hour[hour]);
        return out;
    }

    // march element by element: within one element solve the K x K linear
    // system sum_j D[j][i] z_j = h * f_i for each chain state, top down.
    std::vector<double> start = phi0;
    // Local copy of the differentiation matrix rows for the solver.
    for (int hour = 0; hour < hours; ++hour) {
        double nu = nu_per_hour[hour];
        for (int e = 0; e < elements_per_hour; ++e) {
            // values at the K nodes for each state, solved from the highest
            // derivative down (its rhs is constant nu).
            std::vector<std::vector<double>> node_vals(delta, std::vector<double>(K));
            for (int m = delta - 1; m >= 0; --m) {
                // rhs at node i: h * (next chain state at node i) or h * nu
                std::vector<std::vector<double>> A(K, std::vector<double>(K));
                std::vector<double> b(K);
                for (int i = 0; i < K; ++i) {
                    double rhs = (m == delta - 1) ? nu : node_vals[m + 1][i];
                    b[i] = h * rhs - scheme.deriv[0][i] * start[m];
                    for (int j = 1; j <= K; ++j) A[i][j - 1] = scheme.deriv[j][i];
                }
                for (int col = 0; col < K; ++col) {
                    int piv = col;
                    for (int r = col + 1; r < K; ++r)
                        if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
                    std::swap(A[piv], A[col]);
                    std::swap(b[piv], b[col]);
                    for (int r = col + 1; r < K; ++r) {
                        double f = A[r][col] / A[col][col];
                        for (int cc = col; cc < K; ++cc) A[r][cc] -= f * A[col][cc];
                        b[r] -= f * b[col];
                    }
                }
                for (int i = K; i-- > 0;) {
                    for (int cc = i + 1; cc < K; ++cc) b[i] -= A[i][cc] * b[cc];
                    b[i] /= A[i][i];
                }
                node_vals[m] = b;
            }
            for (int m = 0; m < delta; ++m) {
                for (int i = 0; i < K; ++i) out[m].push_back(node_vals[m][i]);
                start[m] = node_vals[m][K - 1];  // last Radau node is the element end
            }
        }
    }
    return out;
}

std::vector<double> DiscretizedChain::solve_integral(const std::vector<double>& rate_at_nodes,
                                                     double s0) const {
    const int K = scheme.K;
    const double h = 1.0 / elements_per_hour;
    if (rate_at_nodes.size() != node_times.size())
        throw CollocationError("rate series must match the node grid");
    std::vector<double> out;
    out.reserve(node_times.size());
    double start = s0;
    std::size_t idx = 0;
    for (int hour = 0; hour < hours; ++hour) {
        for (int e = 0; e < elements_per_hour; ++e) {
            std::vector<std::vector<double>> A(K, std::vector<double>(K));
            std::vector<double> b(K);
            for (int i = 0; i < K; ++i) {
                b[i] = h * rate_at_nodes[idx + i] - scheme.deriv[0][i] * start;
                for (int j = 1; j <= K; ++j) A[i][j - 1] = scheme.deriv[j][i];
            }
            for (int col = 0; col < K; ++col) {
                int piv = col;
                for (int r = col + 1; r < K; ++r)
                    if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
                std::swap(A[piv], A[col]);
                std::swap(b[piv], b[col]);
                for (int r = col + 1; r < K; ++r) {
                    double f = A[r][col] / A[col][col];
                    for (int cc = col; cc < K; ++cc) A[r][cc] -= f * A[col][cc];
                    b[r] -= f * b[col];
                }
            }
            for (int i = K; i-- > 0;) {
                for (int cc = i + 1; cc < K; ++cc) b[i] -= A[i][cc] * b[cc];
                b[i] /= A[i][i];
            }
            for (int i = 0; i < K; ++i) out.push_back(b[i]);
            start = b[K - 1];
            idx += K;
        }
    }
    return out;
}

}  // namespace dynramp
