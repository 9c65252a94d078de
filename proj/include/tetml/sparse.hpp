#ifndef TETML_SPARSE_HPP
#define TETML_SPARSE_HPP

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <span>
#include <vector>

#include "tetml/errors.hpp"

namespace tetml {

// Symmetric sparse operator in compressed row form (full pattern stored).
struct SparseMatrix {
    int n = 0;      // rows
    int ncols = 0;  // columns (== n for the assembled operators)
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<double> val;

    static SparseMatrix from_triplets(int n, const std::map<std::pair<int, int>, double>& t) {
        return from_triplets(n, n, t);
    }

    static SparseMatrix from_triplets(int n, int ncols,
                                      const std::map<std::pair<int, int>, double>& t) {
        SparseMatrix m;
        m.n = n;
        m.ncols = ncols;
        m.row_ptr.assign((size_t)n + 1, 0);
        for (auto& [rc, v] : t) m.row_ptr[(size_t)rc.first + 1]++;
        for (int i = 0; i < n; ++i) m.row_ptr[(size_t)i + 1] += m.row_ptr[(size_t)i];
        m.col.resize(t.size());
        m.val.resize(t.size());
        std::vector<int> cursor(m.row_ptr.begin(), m.row_ptr.end() - 1);
        for (auto& [rc, v] : t) {
            int pos = cursor[(size_t)rc.first]++;
            m.col[(size_t)pos] = rc.second;
            m.val[(size_t)pos] = v;
        }
        return m;
    }

    void apply(std::span<const double> x, std::span<double> y) const {
        if ((int)x.size() != ncols || (int)y.size() != n)
            throw DimensionMismatch("SparseMatrix::apply size mismatch");
        for (int i = 0; i < n; ++i) {
            double s = 0;
            for (int k = row_ptr[(size_t)i]; k < row_ptr[(size_t)i + 1]; ++k)
                s += val[(size_t)k] * x[(size_t)col[(size_t)k]];
            y[(size_t)i] = s;
        }
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y((size_t)n);
        apply(x, y);
        return y;
    }

    double coeff(int i, int j) const {
        for (int k = row_ptr[(size_t)i]; k < row_ptr[(size_t)i + 1]; ++k)
            if (col[(size_t)k] == j) return val[(size_t)k];
        return 0.0;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d((size_t)n, 0.0);
        for (int i = 0; i < n; ++i) d[(size_t)i] = coeff(i, i);
        return d;
    }

    double max_asymmetry() const {
        double a = 0;
        for (int i = 0; i < n; ++i)
            for (int k = row_ptr[(size_t)i]; k < row_ptr[(size_t)i + 1]; ++k) {
                double d = std::abs(val[(size_t)k] - coeff(col[(size_t)k], i));
                a = std::max(a, d);
            }
        return a;
    }

    // MatrixMarket coordinate format, 1-based.
    void write_matrix_market(std::ostream& os) const {
        os << "%%MatrixMarket matrix coordinate real general\n";
        os << n << " " << ncols << " " << val.size() << "\n";
        char buf[64];
        for (int i = 0; i < n; ++i)
            for (int k = row_ptr[(size_t)i]; k < row_ptr[(size_t)i + 1]; ++k) {
                std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i + 1,
                              col[(size_t)k] + 1, val[(size_t)k]);
                os << buf;
            }
    }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

} // namespace tetml

#endif
