#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace speckern
{

/// Small dense row-major matrix used for reference-element tables.
class Matrix
{
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
        : m_rows(rows), m_cols(cols), m_data(rows * cols, value)
    {
    }

    std::size_t rows() const { return m_rows; }
    std::size_t cols() const { return m_cols; }

    double &operator()(std::size_t i, std::size_t j) { return m_data[i * m_cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return m_data[i * m_cols + j]; }

    std::span<double> row(std::size_t i) { return {m_data.data() + i * m_cols, m_cols}; }
    std::span<const double> row(std::size_t i) const { return {m_data.data() + i * m_cols, m_cols}; }

    double *data() { return m_data.data(); }
    const double *data() const { return m_data.data(); }
    std::span<const double> values() const { return m_data; }

    Matrix transposed() const
    {
        Matrix t(m_cols, m_rows);
        for (std::size_t i = 0; i < m_rows; ++i)
            for (std::size_t j = 0; j < m_cols; ++j)
                t(j, i) = (*this)(i, j);
        return t;
    }

private:
    std::size_t m_rows = 0;
    std::size_t m_cols = 0;
    std::vector<double> m_data;
};

} // namespace speckern
