#include "flexhca/simplex.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace flexhca {

namespace {
constexpr double kEps = 1e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

SimplexSolver::SimplexSolver(const Matrix& a, const Vector& b, const Vector& c)
    : m_(static_cast<int>(b.size())),
      n_(static_cast<int>(c.size())),
      nonbasic_(n_ + 1),
      basic_(m_),
      tableau_(m_ + 2, Vector(n_ + 2)) {
    for (int i = 0; i < m_; ++i)
        for (int j = 0; j < n_; ++j) tableau_[i][j] = a[i][j];
    for (int i = 0; i < m_; ++i) {
        basic_[i] = n_ + i;
        tableau_[i][n_] = -1.0;  // artificial column for phase 1
        tableau_[i][n_ + 1] = b[i];
    }
    for (int j = 0; j < n_; ++j) {
        nonbasic_[j] = j;
        tableau_[m_][j] = -c[j];
    }
    nonbasic_[n_] = -1;
    tableau_[m_ + 1][n_] = 1.0;
}

void SimplexSolver::pivot(int r, int s) {
    double* a = tableau_[r].data();
    const double inv = 1.0 / a[s];
    for (int i = 0; i < m_ + 2; ++i) {
        if (i == r || std::fabs(tableau_[i][s]) <= kEps) continue;
        double* b = tableau_[i].data();
        const double factor = b[s] * inv;
        for (int j = 0; j < n_ + 2; ++j) b[j] -= a[j] * factor;
        b[s] = a[s] * factor;
    }
    for (int j = 0; j < n_ + 2; ++j)
        if (j != s) tableau_[r][j] *= inv;
    for (int i = 0; i < m_ + 2; ++i)
        if (i != r) tableau_[i][s] *= -inv;
    tableau_[r][s] = inv;
    std::swap(basic_[r], nonbasic_[s]);
}

bool SimplexSolver::run(int phase) {
    const int obj = m_ + phase - 1;
    for (;;) {
        int s = -1;
        for (int j = 0; j < n_ + 1; ++j) {
            if (nonbasic_[j] == -phase) continue;
            if (s == -1 || std::make_pair(tableau_[obj][j], nonbasic_[j]) <
                               std::make_pair(tableau_[obj][s], nonbasic_[s]))
                s = j;
        }
        if (tableau_[obj][s] >= -kEps) return true;
        int r = -1;
        for (int i = 0; i < m_; ++i) {
            if (tableau_[i][s] <= kEps) continue;
            if (r == -1 ||
                std::make_pair(tableau_[i][n_ + 1] / tableau_[i][s], basic_[i]) <
                    std::make_pair(tableau_[r][n_ + 1] / tableau_[r][s], basic_[r]))
                r = i;
        }
        if (r == -1) return false;  // unbounded along column s
        pivot(r, s);
    }
}

double SimplexSolver::solve(Vector& x) {
    int r = 0;
    for (int i = 1; i < m_; ++i)
        if (tableau_[i][n_ + 1] < tableau_[r][n_ + 1]) r = i;
    if (tableau_[r][n_ + 1] < -kEps) {
        pivot(r, n_);
        if (!run(2) || tableau_[m_ + 1][n_ + 1] < -kEps) return -kInf;
        for (int i = 0; i < m_; ++i) {
            if (basic_[i] != -1) continue;
            int s = 0;
            for (int j = 1; j <= n_; ++j)
                if (std::make_pair(tableau_[i][j], nonbasic_[j]) <
                    std::make_pair(tableau_[i][s], nonbasic_[s]))
                    s = j;
            pivot(i, s);
        }
    }
    const bool bounded = run(1);
    x.assign(n_, 0.0);
    for (int i = 0; i < m_; ++i)
        if (basic_[i] < n_) x[basic_[i]] = tableau_[i][n_ + 1];
    return bounded ? tableau_[m_][n_ + 1] : kInf;
}

} // namespace flexhca
