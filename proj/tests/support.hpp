#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include "nfcast/anfis.hpp"
#include "nfcast/dataset.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace testing {

inline std::filesystem::path source_dir() { return NFCAST_SOURCE_DIR; }
inline std::filesystem::path data_dir() { return source_dir() / "data"; }
inline std::filesystem::path config_dir() { return source_dir() / "configs"; }

inline std::filesystem::path scratch_dir(const std::string &name) {
	auto dir = std::filesystem::temp_directory_path() / ("nfcast_test_" + name);
	std::filesystem::remove_all(dir);
	std::filesystem::create_directories(dir);
	return dir;
}

inline nfcast::EmbeddedDataset make_batch(std::size_t d, const std::vector<std::vector<double>> &rows,
                                          const std::vector<double> &targets) {
	nfcast::EmbeddedDataset ds;
	ds.d = d;
	ds.h = 1;
	for (std::size_t i = 0; i < rows.size(); ++i) {
		ds.push_back(rows[i], targets[i], nfcast::Timestamp::yearly(2000 + static_cast<int>(i)));
	}
	return ds;
}

inline nfcast::TimeSeries yearly_series(int first_year, const std::vector<double> &values) {
	std::vector<nfcast::SeriesPoint> pts;
	for (std::size_t i = 0; i < values.size(); ++i) {
		pts.push_back({nfcast::Timestamp::yearly(first_year + static_cast<int>(i)), values[i]});
	}
	return {nfcast::Cadence::yearly, pts};
}

inline nfcast::TimeSeries monthly_series(int year, int month, const std::vector<double> &values) {
	std::vector<nfcast::SeriesPoint> pts;
	nfcast::Timestamp t = nfcast::Timestamp::monthly(year, month);
	for (double v : values) {
		pts.push_back({t, v});
		t = t.next();
	}
	return {nfcast::Cadence::monthly, pts};
}

/// Solves M z = rhs by Gaussian elimination with partial pivoting.
template <typename T>
std::vector<T> gauss_solve(std::vector<std::vector<T>> m, std::vector<T> rhs) {
	const std::size_t n = rhs.size();
	for (std::size_t col = 0; col < n; ++col) {
		std::size_t pivot = col;
		for (std::size_t r = col + 1; r < n; ++r) {
			if (std::abs(m[r][col]) > std::abs(m[pivot][col])) {
				pivot = r;
			}
		}
		if (m[pivot][col] == 0.0) {
			throw std::runtime_error("singular normal equations");
		}
		std::swap(m[col], m[pivot]);
		std::swap(rhs[col], rhs[pivot]);
		for (std::size_t r = col + 1; r < n; ++r) {
			const T f = m[r][col] / m[col][col];
			for (std::size_t c = col; c < n; ++c) {
				m[r][c] -= f * m[col][c];
			}
			rhs[r] -= f * rhs[col];
		}
	}
	std::vector<T> z(n);
	for (std::size_t i = n; i-- > 0;) {
		T s = rhs[i];
		for (std::size_t c = i + 1; c < n; ++c) {
			s -= m[i][c] * z[c];
		}
		z[i] = s / m[i][i];
	}
	return z;
}

/// Consequents from explicitly formed normal equations AᵀA θ = Aᵀy. The
/// design row for x is [w̄_1 x, w̄_1, ..., w̄_R x, w̄_R], with w̄ computed here
/// from the Gaussian premises directly. Result layout matches that row.
/// Accumulated and solved in extended precision, since forming AᵀA squares
/// the condition number.
inline std::vector<double> normal_equations_consequents(const nfcast::AnfisModel &m,
                                                        const nfcast::EmbeddedDataset &batch) {
	using Wide = long double;
	const std::size_t cols = m.rules * (m.d + 1);
	std::vector<std::vector<Wide>> ata(cols, std::vector<Wide>(cols, 0.0L));
	std::vector<Wide> aty(cols, 0.0L);
	std::vector<Wide> row(cols), w(m.rules);
	for (std::size_t i = 0; i < batch.size(); ++i) {
		const auto x = batch.input(i);
		Wide total = 0.0L;
		for (std::size_t r = 0; r < m.rules; ++r) {
			Wide e = 0.0L;
			for (std::size_t j = 0; j < m.d; ++j) {
				const Wide z = (Wide{x[j]} - m.center(r, j)) / m.sigma(r, j);
				e += 0.5L * z * z;
			}
			w[r] = std::exp(-e);
			total += w[r];
		}
		total = std::max(total, Wide{m.firing_floor});
		for (std::size_t r = 0; r < m.rules; ++r) {
			const Wide wb = w[r] / total;
			for (std::size_t j = 0; j < m.d; ++j) {
				row[r * (m.d + 1) + j] = wb * x[j];
			}
			row[r * (m.d + 1) + m.d] = wb;
		}
		for (std::size_t a = 0; a < cols; ++a) {
			aty[a] += row[a] * batch.targets[i];
			for (std::size_t b = 0; b < cols; ++b) {
				ata[a][b] += row[a] * row[b];
			}
		}
	}
	const auto z = gauss_solve(ata, aty);
	return {z.begin(), z.end()};
}

/// Consequents of a model in the layout used by normal_equations_consequents.
inline std::vector<double> flat_consequents(const nfcast::AnfisModel &m) {
	std::vector<double> out;
	for (std::size_t r = 0; r < m.rules; ++r) {
		for (std::size_t j = 0; j < m.d; ++j) {
			out.push_back(m.coefficient(r, j));
		}
		out.push_back(m.biases[r]);
	}
	return out;
}

inline double relative_error(const std::vector<double> &got, const std::vector<double> &want) {
	double num = 0.0, den = 0.0;
	for (std::size_t i = 0; i < got.size(); ++i) {
		num += (got[i] - want[i]) * (got[i] - want[i]);
		den += want[i] * want[i];
	}
	return std::sqrt(num) / std::max(std::sqrt(den), std::numeric_limits<double>::min());
}

struct FdGradient {
	std::vector<double> centers;
	std::vector<double> sigmas;
};

/// Central finite differences of the batch SSE with respect to every premise.
inline FdGradient finite_difference_gradient(const nfcast::AnfisModel &m, const nfcast::EmbeddedDataset &batch,
                                             double step = 1e-5) {
	FdGradient g;
	for (std::size_t k = 0; k < m.centers.size(); ++k) {
		auto plus = m, minus = m;
		plus.centers[k] += step;
		minus.centers[k] -= step;
		g.centers.push_back((nfcast::anfis_sse(plus, batch) - nfcast::anfis_sse(minus, batch)) / (2 * step));
	}
	for (std::size_t k = 0; k < m.sigmas.size(); ++k) {
		auto plus = m, minus = m;
		plus.sigmas[k] += step;
		minus.sigmas[k] -= step;
		g.sigmas.push_back((nfcast::anfis_sse(plus, batch) - nfcast::anfis_sse(minus, batch)) / (2 * step));
	}
	return g;
}

/// A random model with widths bounded away from zero and nonzero consequents.
inline nfcast::AnfisModel random_model(std::mt19937_64 &rng, std::size_t d, std::size_t rules) {
	std::uniform_real_distribution<double> centre(-1.0, 1.0), width(0.5, 1.5), coef(-2.0, 2.0);
	std::vector<double> c, s;
	for (std::size_t k = 0; k < d * rules; ++k) {
		c.push_back(centre(rng));
		s.push_back(width(rng));
	}
	auto m = nfcast::make_anfis(d, c, s);
	for (auto &v : m.coefficients) {
		v = coef(rng);
	}
	for (auto &v : m.biases) {
		v = coef(rng);
	}
	return m;
}

inline nfcast::EmbeddedDataset random_batch(std::mt19937_64 &rng, std::size_t d, std::size_t n) {
	std::uniform_real_distribution<double> u(-1.5, 1.5);
	std::vector<std::vector<double>> rows(n, std::vector<double>(d));
	std::vector<double> y(n);
	for (std::size_t i = 0; i < n; ++i) {
		for (auto &v : rows[i]) {
			v = u(rng);
		}
		y[i] = u(rng) * 3.0;
	}
	return make_batch(d, rows, y);
}

/// True when every centre is the mean of the rows nearest to it (ties to the
/// lower index), i.e. one more Lloyd step would not move anything.
inline bool is_lloyd_fixed_point(std::span<const double> rows, std::size_t d, const std::vector<double> &centres,
                                 double tol) {
	const std::size_t k = centres.size() / d;
	const std::size_t n = rows.size() / d;
	std::vector<double> sums(k * d, 0.0);
	std::vector<std::size_t> counts(k, 0);
	for (std::size_t i = 0; i < n; ++i) {
		std::size_t best = 0;
		double best_d = std::numeric_limits<double>::infinity();
		for (std::size_t c = 0; c < k; ++c) {
			double dist = 0.0;
			for (std::size_t j = 0; j < d; ++j) {
				const double diff = rows[i * d + j] - centres[c * d + j];
				dist += diff * diff;
			}
			if (dist < best_d) {
				best_d = dist;
				best = c;
			}
		}
		++counts[best];
		for (std::size_t j = 0; j < d; ++j) {
			sums[best * d + j] += rows[i * d + j];
		}
	}
	for (std::size_t c = 0; c < k; ++c) {
		if (counts[c] == 0) {
			continue;
		}
		for (std::size_t j = 0; j < d; ++j) {
			if (std::abs(sums[c * d + j] / static_cast<double>(counts[c]) - centres[c * d + j]) > tol) {
				return false;
			}
		}
	}
	return true;
}

} // namespace testing
