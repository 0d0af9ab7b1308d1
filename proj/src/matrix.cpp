#include "covx/matrix.hpp"

#include "covx/errors.hpp"

#include <algorithm>
#include <cmath>

namespace covx {

DataMatrix::DataMatrix(std::size_t p, std::size_t n) : p_(p), n_(n), data_(p * n, 0.0) {
    if (p == 0 || n == 0) throw DomainError("DataMatrix requires p >= 1 and n >= 1");
}

DataMatrix DataMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) throw DomainError("DataMatrix requires p >= 1 and n >= 1");
    DataMatrix x(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != x.n_) throw DomainError("ragged rows in DataMatrix::from_rows");
        for (std::size_t t = 0; t < x.n_; ++t) x(i, t) = rows[i][t];
    }
    if (!x.all_finite()) throw DomainError("DataMatrix entries must be finite");
    return x;
}

bool DataMatrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

SymMatrix SymMatrix::identity(std::size_t p) {
    SymMatrix m(p);
    for (std::size_t i = 0; i < p; ++i) m.data_[i * p + i] = 1.0;
    return m;
}

bool SymMatrix::is_symmetric() const noexcept {
    for (std::size_t i = 0; i < p_; ++i)
        for (std::size_t j = i + 1; j < p_; ++j)
            if (data_[i * p_ + j] != data_[j * p_ + i]) return false;
    return true;
}

}  // namespace covx
