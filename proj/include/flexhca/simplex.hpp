#pragma once

#include <vector>

namespace flexhca {

// Dense two-phase simplex for the small LPs embedded in the delay solver:
// max c'x subject to Ax <= b, x >= 0. Bland-style tie-breaking on variable
// ids keeps it cycle-free. solve() returns the objective value, -inf when
// infeasible and +inf when unbounded; x receives the primal solution.
class SimplexSolver {
public:
    using Vector = std::vector<double>;
    using Matrix = std::vector<Vector>;

    SimplexSolver(const Matrix& a, const Vector& b, const Vector& c);

    double solve(Vector& x);

private:
    void pivot(int r, int s);
    bool run(int phase);

    int m_ = 0, n_ = 0;
    std::vector<int> nonbasic_, basic_;
    Matrix tableau_;
};

} // namespace flexhca
