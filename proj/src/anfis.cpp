#include "nfcast/anfis.hpp"

#include "json_io.hpp"
#include "nfcast/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace nfcast {

void TrainConfig::validate() const {
	if (epochs < 1) {
		throw ConfigError("epochs must be positive");
	}
	if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
		throw ConfigError("learning rate must be a finite non-negative number");
	}
	if (!(sigma_floor > 0.0) || !(firing_floor > 0.0)) {
		throw ConfigError("sigma_floor and firing_floor must be positive");
	}
}

void AnfisModel::validate() const {
	if (d == 0 || rules == 0) {
		throw ShapeError("ANFIS needs at least one input and one rule");
	}
	const std::size_t n = rules * d;
	if (centers.size() != n || sigmas.size() != n || coefficients.size() != n || biases.size() != rules) {
		throw ShapeError("ANFIS parameter arrays do not match rules x d");
	}
	if (!(firing_floor > 0.0) || !(sigma_floor > 0.0)) {
		throw NumericError("ANFIS floors must be positive");
	}
	for (std::size_t i = 0; i < n; ++i) {
		if (!std::isfinite(centers[i]) || !std::isfinite(coefficients[i]) || !std::isfinite(sigmas[i])) {
			throw NumericError("non-finite ANFIS parameter at index " + std::to_string(i));
		}
		if (sigmas[i] < sigma_floor) {
			throw NumericError("width below sigma floor at index " + std::to_string(i));
		}
	}
}

AnfisModel make_anfis(std::size_t d, std::vector<double> centers, std::vector<double> sigmas, double sigma_floor,
                      double firing_floor) {
	if (d == 0 || centers.empty() || centers.size() % d != 0 || sigmas.size() != centers.size()) {
		throw ShapeError("centres and widths must both be rules x d");
	}
	AnfisModel m;
	m.d = d;
	m.rules = centers.size() / d;
	m.centers = std::move(centers);
	m.sigmas = std::move(sigmas);
	m.coefficients.assign(m.rules * d, 0.0);
	m.biases.assign(m.rules, 0.0);
	m.sigma_floor = sigma_floor;
	m.firing_floor = firing_floor;
	m.validate();
	return m;
}

// Initialisation ------------------------------------------------------------

namespace {

// Portable uniform draw in [0, 1); std::uniform_real_distribution is not
// bit-reproducible across standard libraries.
double unit_uniform(std::mt19937_64 &rng) {
	return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
	double s = 0.0;
	for (std::size_t j = 0; j < a.size(); ++j) {
		s += (a[j] - b[j]) * (a[j] - b[j]);
	}
	return s;
}

} // namespace

std::vector<double> kmeans(std::span<const double> rows, std::size_t d, std::size_t k, std::uint64_t seed) {
	if (d == 0 || rows.size() % d != 0) {
		throw ShapeError("k-means rows must be a multiple of d");
	}
	const std::size_t n = rows.size() / d;
	if (k == 0 || n < k) {
		throw ConfigError("k-means needs at least " + std::to_string(k) + " rows, got " + std::to_string(n));
	}
	auto row = [&](std::size_t i) { return rows.subspan(i * d, d); };

	std::mt19937_64 rng(seed);
	std::vector<double> centers;
	centers.reserve(k * d);
	std::vector<bool> chosen(n, false);
	auto take = [&](std::size_t i) {
		chosen[i] = true;
		const auto r = row(i);
		centers.insert(centers.end(), r.begin(), r.end());
	};
	take(static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n)));

	// k-means++ seeding.
	std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
	for (std::size_t c = 1; c < k; ++c) {
		const std::span<const double> last(centers.data() + (c - 1) * d, d);
		double total = 0.0;
		for (std::size_t i = 0; i < n; ++i) {
			nearest[i] = std::min(nearest[i], squared_distance(row(i), last));
			total += nearest[i];
		}
		std::size_t pick = n;
		if (total > 0.0) {
			double u = unit_uniform(rng) * total;
			for (std::size_t i = 0; i < n; ++i) {
				if (nearest[i] == 0.0) {
					continue;
				}
				pick = i; // last positive row absorbs rounding in u
				if (u < nearest[i]) {
					break;
				}
				u -= nearest[i];
			}
		}
		if (pick == n) {
			// Fewer distinct rows than clusters.
			pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
		}
		take(pick);
	}

	// Lloyd iterations.
	std::vector<std::size_t> assign(n, k);
	for (int iter = 0; iter < 500; ++iter) {
		bool changed = false;
		for (std::size_t i = 0; i < n; ++i) {
			std::size_t best = 0;
			double best_d = std::numeric_limits<double>::infinity();
			for (std::size_t c = 0; c < k; ++c) {
				const double dist = squared_distance(row(i), {centers.data() + c * d, d});
				if (dist < best_d) {
					best_d = dist;
					best = c;
				}
			}
			if (assign[i] != best) {
				assign[i] = best;
				changed = true;
			}
		}
		if (!changed) {
			break;
		}
		std::vector<double> sums(k * d, 0.0);
		std::vector<std::size_t> counts(k, 0);
		for (std::size_t i = 0; i < n; ++i) {
			++counts[assign[i]];
			for (std::size_t j = 0; j < d; ++j) {
				sums[assign[i] * d + j] += rows[i * d + j];
			}
		}
		for (std::size_t c = 0; c < k; ++c) {
			if (counts[c] == 0) {
				continue; // keeps its previous position
			}
			for (std::size_t j = 0; j < d; ++j) {
				centers[c * d + j] = sums[c * d + j] / static_cast<double>(counts[c]);
			}
		}
	}
	return centers;
}

AnfisModel init_anfis(std::span<const double> rows, std::size_t d, std::size_t rules, std::uint64_t seed,
                      double sigma_floor_fraction, double firing_floor) {
	if (rules == 0) {
		throw ConfigError("rule count must be at least 1");
	}
	if (d == 0 || rows.size() % d != 0) {
		throw ShapeError("training rows must be a multiple of d");
	}
	const std::size_t n = rows.size() / d;
	if (n < rules) {
		throw ConfigError("need at least as many training rows as rules (" + std::to_string(n) + " < " +
		                  std::to_string(rules) + ")");
	}
	const auto [lo, hi] = std::minmax_element(rows.begin(), rows.end());
	const double range = *hi - *lo;
	const double floor = sigma_floor_fraction * (range > 0.0 ? range : 1.0);

	std::vector<double> centers = kmeans(rows, d, rules, seed);
	std::vector<double> sigmas(rules * d, floor);
	if (rules == 1) {
		for (std::size_t j = 0; j < d; ++j) {
			double mean = 0.0;
			for (std::size_t i = 0; i < n; ++i) {
				mean += rows[i * d + j];
			}
			mean /= static_cast<double>(n);
			double var = 0.0;
			for (std::size_t i = 0; i < n; ++i) {
				var += (rows[i * d + j] - mean) * (rows[i * d + j] - mean);
			}
			sigmas[j] = std::max(std::sqrt(var / static_cast<double>(n)), floor);
		}
	} else {
		for (std::size_t r = 0; r < rules; ++r) {
			const std::span<const double> cr(centers.data() + r * d, d);
			std::size_t other = r == 0 ? 1 : 0;
			double best = std::numeric_limits<double>::infinity();
			for (std::size_t q = 0; q < rules; ++q) {
				if (q == r) {
					continue;
				}
				const double dist = squared_distance(cr, {centers.data() + q * d, d});
				if (dist < best) {
					best = dist;
					other = q;
				}
			}
			for (std::size_t j = 0; j < d; ++j) {
				sigmas[r * d + j] = std::max(std::abs(cr[j] - centers[other * d + j]), floor);
			}
		}
	}
	auto m = make_anfis(d, std::move(centers), std::move(sigmas), floor, firing_floor);
	m.seed = seed;
	return m;
}

// Forward pass --------------------------------------------------------------

namespace {

void check_input(const AnfisModel &m, std::span<const double> x) {
	if (x.size() != m.d) {
		throw ShapeError("input has " + std::to_string(x.size()) + " entries, model expects " +
		                 std::to_string(m.d));
	}
	for (double v : x) {
		if (!std::isfinite(v)) {
			throw NumericError("non-finite ANFIS input");
		}
	}
}

// Raw firing strengths into `w`; returns their sum.
double firing(const AnfisModel &m, std::span<const double> x, std::span<double> w) {
	double total = 0.0;
	for (std::size_t r = 0; r < m.rules; ++r) {
		double exponent = 0.0;
		for (std::size_t j = 0; j < m.d; ++j) {
			const double z = (x[j] - m.center(r, j)) / m.sigma(r, j);
			exponent += 0.5 * z * z;
		}
		w[r] = std::exp(-exponent);
		total += w[r];
	}
	return total;
}

double rule_output(const AnfisModel &m, std::size_t r, std::span<const double> x) {
	double f = m.biases[r];
	for (std::size_t j = 0; j < m.d; ++j) {
		f += m.coefficient(r, j) * x[j];
	}
	return f;
}

} // namespace

AnfisOutput anfis_forward(const AnfisModel &m, std::span<const double> x) {
	check_input(m, x);
	AnfisOutput out;
	out.normalized_firing.resize(m.rules);
	const double total = firing(m, x, out.normalized_firing);
	const double norm = std::max(total, m.firing_floor);
	for (std::size_t r = 0; r < m.rules; ++r) {
		out.normalized_firing[r] /= norm;
		out.y += out.normalized_firing[r] * rule_output(m, r, x);
	}
	return out;
}

double anfis_predict(const AnfisModel &m, std::span<const double> x) {
	check_input(m, x);
	std::vector<double> w(m.rules);
	const double norm = std::max(firing(m, x, w), m.firing_floor);
	double y = 0.0;
	for (std::size_t r = 0; r < m.rules; ++r) {
		y += (w[r] / norm) * rule_output(m, r, x);
	}
	return y;
}

double anfis_sse(const AnfisModel &m, const EmbeddedDataset &batch) {
	if (batch.d != m.d) {
		throw ShapeError("batch dimension " + std::to_string(batch.d) + " does not match model dimension " +
		                 std::to_string(m.d));
	}
	double sse = 0.0;
	for (std::size_t i = 0; i < batch.size(); ++i) {
		const double e = batch.targets[i] - anfis_predict(m, batch.input(i));
		sse += e * e;
	}
	return sse;
}

// Least squares -------------------------------------------------------------

AnfisModel lse_consequents(const AnfisModel &m, const EmbeddedDataset &batch, std::vector<std::string> *warnings) {
	if (batch.d != m.d) {
		throw ShapeError("batch dimension does not match model dimension");
	}
	if (batch.empty()) {
		throw ShapeError("least squares needs at least one row");
	}
	const std::size_t n = batch.size();
	const std::size_t cols = m.consequent_count();
	if (warnings && n < cols) {
		warnings->push_back("underdetermined consequent fit: " + std::to_string(n) + " rows for " +
		                    std::to_string(cols) + " unknowns; using the minimum-norm solution");
	}

	Eigen::MatrixXd design(n, cols);
	Eigen::VectorXd rhs(n);
	std::vector<double> w(m.rules);
	for (std::size_t i = 0; i < n; ++i) {
		const auto x = batch.input(i);
		check_input(m, x);
		const double norm = std::max(firing(m, x, w), m.firing_floor);
		for (std::size_t r = 0; r < m.rules; ++r) {
			const double wbar = w[r] / norm;
			for (std::size_t j = 0; j < m.d; ++j) {
				design(i, r * (m.d + 1) + j) = wbar * x[j];
			}
			design(i, r * (m.d + 1) + m.d) = wbar;
		}
		rhs(i) = batch.targets[i];
	}
	if (!design.allFinite() || !rhs.allFinite()) {
		throw NumericError("non-finite entry in the consequent design matrix");
	}

	const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
	const Eigen::VectorXd theta = cod.solve(rhs);
	if (!theta.allFinite()) {
		throw NumericError("least-squares solve produced non-finite consequents");
	}

	AnfisModel out = m;
	for (std::size_t r = 0; r < m.rules; ++r) {
		for (std::size_t j = 0; j < m.d; ++j) {
			out.coefficient(r, j) = theta(static_cast<Eigen::Index>(r * (m.d + 1) + j));
		}
		out.biases[r] = theta(static_cast<Eigen::Index>(r * (m.d + 1) + m.d));
	}
	return out;
}

// Steepest descent ----------------------------------------------------------

PremiseGradient premise_gradient(const AnfisModel &m, const EmbeddedDataset &batch) {
	if (batch.d != m.d) {
		throw ShapeError("batch dimension does not match model dimension");
	}
	PremiseGradient g;
	g.centers.assign(m.rules * m.d, 0.0);
	g.sigmas.assign(m.rules * m.d, 0.0);
	std::vector<double> w(m.rules);
	std::vector<double> f(m.rules);
	for (std::size_t i = 0; i < batch.size(); ++i) {
		const auto x = batch.input(i);
		check_input(m, x);
		const double total = firing(m, x, w);
		const bool floored = total <= m.firing_floor;
		const double norm = floored ? m.firing_floor : total;
		double y = 0.0;
		for (std::size_t r = 0; r < m.rules; ++r) {
			f[r] = rule_output(m, r, x);
			y += w[r] / norm * f[r];
		}
		// dSSE/dy = -2 (t - y)
		const double dy = -2.0 * (batch.targets[i] - y);
		for (std::size_t r = 0; r < m.rules; ++r) {
			const double dy_dw = floored ? f[r] / norm : (f[r] - y) / norm;
			const double scale = dy * dy_dw * w[r];
			for (std::size_t j = 0; j < m.d; ++j) {
				const double s = m.sigma(r, j);
				const double u = x[j] - m.center(r, j);
				g.centers[r * m.d + j] += scale * u / (s * s);
				g.sigmas[r * m.d + j] += scale * u * u / (s * s * s);
			}
		}
	}
	return g;
}

AnfisModel sd_premises(const AnfisModel &m, const EmbeddedDataset &batch, double learning_rate) {
	if (!(learning_rate >= 0.0)) {
		throw ConfigError("learning rate must be non-negative");
	}
	const auto g = premise_gradient(m, batch);
	AnfisModel out = m;
	for (std::size_t r = 0; r < m.rules; ++r) {
		for (std::size_t j = 0; j < m.d; ++j) {
			const std::size_t k = r * m.d + j;
			if (!std::isfinite(g.centers[k])) {
				throw NumericError("non-finite gradient for centre[" + std::to_string(r) + "][" +
				                   std::to_string(j) + "]");
			}
			if (!std::isfinite(g.sigmas[k])) {
				throw NumericError("non-finite gradient for sigma[" + std::to_string(r) + "][" +
				                   std::to_string(j) + "]");
			}
			out.centers[k] -= learning_rate * g.centers[k];
			out.sigmas[k] = std::max(out.sigmas[k] - learning_rate * g.sigmas[k], m.sigma_floor);
		}
	}
	return out;
}

// Hybrid training -----------------------------------------------------------

std::pair<AnfisModel, LossTrace> train_hybrid(const AnfisModel &m, const EmbeddedDataset &train,
                                              const TrainConfig &cfg, std::vector<std::string> *warnings) {
	cfg.validate();
	m.validate();
	if (train.empty()) {
		throw ShapeError("training set is empty");
	}
	AnfisModel model = m;
	model.config = cfg;
	LossTrace trace;
	trace.epoch_sse.reserve(static_cast<std::size_t>(cfg.epochs));
	for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
		try {
			model = lse_consequents(model, train, epoch == 0 ? warnings : nullptr);
			trace.epoch_sse.push_back(anfis_sse(model, train));
			model = sd_premises(model, train, cfg.learning_rate);
		} catch (const NumericError &e) {
			throw NumericError("epoch " + std::to_string(epoch + 1) + ": " + e.what());
		}
	}
	try {
		model = lse_consequents(model, train);
	} catch (const NumericError &e) {
		throw NumericError("closing least-squares pass: " + std::string(e.what()));
	}
	trace.final_sse = anfis_sse(model, train);
	return {std::move(model), std::move(trace)};
}

std::pair<double, double> max_min(std::span<const double> x) {
	if (x.empty()) {
		throw ShapeError("MAX_MIN of an empty vector");
	}
	const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
	return {*hi, *lo};
}

// Serialization -------------------------------------------------------------

namespace detail {

nlohmann::ordered_json train_config_json(const TrainConfig &c) {
	return {{"epochs", c.epochs},
	        {"learning_rate", c.learning_rate},
	        {"rng_seed", c.rng_seed},
	        {"sigma_floor", c.sigma_floor},
	        {"firing_floor", c.firing_floor}};
}

TrainConfig train_config_from(const nlohmann::ordered_json &j) {
	TrainConfig c;
	c.epochs = j.at("epochs").get<int>();
	c.learning_rate = j.at("learning_rate").get<double>();
	c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
	c.sigma_floor = j.at("sigma_floor").get<double>();
	c.firing_floor = j.at("firing_floor").get<double>();
	return c;
}

nlohmann::ordered_json anfis_json(const AnfisModel &m) {
	auto rows = [&](const std::vector<double> &flat) {
		nlohmann::ordered_json out = nlohmann::ordered_json::array();
		for (std::size_t r = 0; r < m.rules; ++r) {
			out.push_back(std::vector<double>(flat.begin() + static_cast<long>(r * m.d),
			                                  flat.begin() + static_cast<long>((r + 1) * m.d)));
		}
		return out;
	};
	nlohmann::ordered_json j;
	j["d"] = m.d;
	j["R"] = m.rules;
	j["centers"] = rows(m.centers);
	j["sigmas"] = rows(m.sigmas);
	j["coefficients"] = rows(m.coefficients);
	j["biases"] = m.biases;
	j["sigma_floor"] = m.sigma_floor;
	j["firing_floor"] = m.firing_floor;
	j["config"] = train_config_json(m.config);
	j["seed"] = m.seed;
	return j;
}

AnfisModel anfis_from(const nlohmann::ordered_json &j) {
	AnfisModel m;
	m.d = j.at("d").get<std::size_t>();
	m.rules = j.at("R").get<std::size_t>();
	auto flat = [&](const char *key) {
		std::vector<double> out;
		for (const auto &row : j.at(key)) {
			const auto v = row.get<std::vector<double>>();
			if (v.size() != m.d) {
				throw ShapeError(std::string("row of '") + key + "' has the wrong length");
			}
			out.insert(out.end(), v.begin(), v.end());
		}
		return out;
	};
	m.centers = flat("centers");
	m.sigmas = flat("sigmas");
	m.coefficients = flat("coefficients");
	m.biases = j.at("biases").get<std::vector<double>>();
	m.sigma_floor = j.at("sigma_floor").get<double>();
	m.firing_floor = j.at("firing_floor").get<double>();
	m.config = train_config_from(j.at("config"));
	m.seed = j.at("seed").get<std::uint64_t>();
	m.validate();
	return m;
}

} // namespace detail

std::string anfis_to_json(const AnfisModel &m) {
	return detail::anfis_json(m).dump(2);
}

AnfisModel anfis_from_json(const std::string &text) {
	return detail::anfis_from(nlohmann::ordered_json::parse(text));
}

} // namespace nfcast
