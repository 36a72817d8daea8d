#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sparsemix/core.hpp"
#include "sparsemix/datagen.hpp"
#include "sparsemix/io.hpp"
#include "sparsemix/parallel.hpp"
#include "sparsemix/rng.hpp"
#include "sparsemix/statistics.hpp"

namespace sparsemix {

/// Table key. `s` is stored as 0 for statistics that do not depend on it.
struct CalibrationKey
{
    StatId stat = StatId::top_eig;
    Index n = 0;
    Index p = 0;
    Index s = 0;
    double level = 0.05;

    static CalibrationKey make(StatId stat, Index n, Index p, Index s, double level)
    {
        return {stat, n, p, uses_sparsity(stat) ? s : 0, level};
    }

    bool matches(const CalibrationKey& o) const
    {
        return stat == o.stat && n == o.n && p == o.p && s == o.s &&
               std::abs(level - o.level) <= 1e-9 * std::max(std::abs(level), std::abs(o.level));
    }

    std::string describe() const
    {
        std::ostringstream os;
        os << to_string(stat) << " n=" << n << " p=" << p << " s=" << s << " level=" << level;
        return os.str();
    }
};

struct CalibrationEntry
{
    CalibrationKey key;
    double critical = 0.0;
    int reps = 0;
    std::uint64_t seed = 0;
    RejectionSide side = RejectionSide::upper;
};

/*!
 * Monte Carlo critical values keyed by (statistic, n, p, s, level).
 *
 * CSV layout: stat_id,n,p,s,level,critical,reps,seed,side
 */
class CalibrationTable
{
  public:
    static constexpr const char* kHeader = "stat_id,n,p,s,level,critical,reps,seed,side";

    const std::vector<CalibrationEntry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

    const CalibrationEntry* find(const CalibrationKey& key) const
    {
        for (const auto& e : entries_)
            if (e.key.matches(key))
                return &e;
        return nullptr;
    }

    /// Insert, replacing an entry with the same key.
    void add(const CalibrationEntry& entry)
    {
        for (auto& e : entries_) {
            if (e.key.matches(entry.key)) {
                e = entry;
                return;
            }
        }
        entries_.push_back(entry);
    }

    void merge(const CalibrationTable& other)
    {
        for (const auto& e : other.entries_)
            add(e);
    }

    /// Critical value for `key`; throws MissingCalibration if absent.
    double critical(const CalibrationKey& key) const
    {
        if (const auto* e = find(key))
            return e->critical;
        throw MissingCalibration("no calibration entry for " + key.describe() +
                                 "; run `sparsemix calibrate` for it");
    }

    void write_csv(std::ostream& out) const
    {
        out << kHeader << '\n';
        for (const auto& e : entries_) {
            out << to_string(e.key.stat) << ',' << e.key.n << ',' << e.key.p << ','
                << e.key.s << ',' << format_double(e.key.level) << ','
                << format_double(e.critical) << ',' << e.reps << ',' << e.seed << ','
                << to_string(e.side) << '\n';
        }
    }

    void save(const std::string& path) const
    {
        std::ofstream out(path);
        if (!out)
            throw IoError("cannot open '" + path + "' for writing");
        write_csv(out);
        if (!out)
            throw IoError("failed writing '" + path + "'");
    }

    static CalibrationTable read_csv(std::istream& in)
    {
        CalibrationTable t;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            line = trim(line);
            if (line.empty() || (line_no == 1 && line.rfind("stat_id", 0) == 0))
                continue;
            const auto f = split(line, ',');
            if (f.size() != 9)
                throw InvalidInput("calibration line " + std::to_string(line_no) +
                                   ": expected 9 fields");
            CalibrationEntry e;
            e.key.stat = parse_stat_id(f[0]);
            e.key.n = parse_integer(f[1]);
            e.key.p = parse_integer(f[2]);
            e.key.s = parse_integer(f[3]);
            e.key.level = parse_double(f[4]);
            e.critical = parse_double(f[5]);
            e.reps = static_cast<int>(parse_integer(f[6]));
            e.seed = std::stoull(f[7]);
            e.side = parse_rejection_side(f[8]);
            t.add(e);
        }
        return t;
    }

    static CalibrationTable load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open calibration table '" + path + "'");
        return read_csv(in);
    }

  private:
    std::vector<CalibrationEntry> entries_;
};

struct CalibrationRequest
{
    StatId stat = StatId::top_eig;
    Index n = 100;
    Index p = 10;
    Index s = 1;
    double alpha = 0.05;
    int reps = 2000;
    std::uint64_t seed = 1;
    StatOptions options;  // options.s is overridden by `s`
    /// Known covariance; when set and not the identity, the null is simulated
    /// as N(0, sigma) (conditional calibration).
    std::optional<Matrix> sigma;
    /// False when the analysis has no known covariance.
    bool covariance_known = true;
    unsigned threads = 1;
};

/// Null dataset for replication r: N(0, I) rows, times `root` when given
/// (rows then follow N(0, root^T root)). Draws come from derive_seed(seed, {r}).
inline Dataset null_dataset(Index n, Index p, std::uint64_t seed, std::uint64_t r,
                            const Matrix* root = nullptr)
{
    RandomStream rng(derive_seed(seed, {r}));
    Matrix z(n, p);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j)
            z(i, j) = rng.normal();
    if (root)
        z = z * *root;
    return Dataset(std::move(z));
}

/// Null law used for calibration: the identity unless a non-identity known
/// covariance is supplied (conditional calibration).
struct NullModel
{
    Matrix sigma;
    std::optional<Matrix> root;

    NullModel(Index p, const std::optional<Matrix>& known)
        : sigma(Matrix::Identity(p, p))
    {
        if (known && (known->rows() != p || known->cols() != p))
            throw InvalidInput("calibration covariance does not match p");
        if (known && *known != sigma) {
            sigma = *known;
            root = sampling_root(sigma);
        }
    }

    const Matrix* root_ptr() const { return root ? &*root : nullptr; }
};

/// Statistic values on `reps` null datasets; replication r draws from the
/// stream derive_seed(seed, {r}). Result is indexed by replication.
inline std::vector<double> null_distribution(const CalibrationRequest& req)
{
    if (req.reps < 1)
        throw InvalidInput("reps must be positive");
    if (!req.covariance_known && requires_known_sigma(req.stat))
        throw InvalidInput("statistic '" + std::string(to_string(req.stat)) +
                           "' is not calibratable without a known covariance; valid: " +
                           unknown_sigma_statistics());
    if (req.n < 2 || req.p < 1)
        throw InvalidInput("calibration needs n >= 2 and p >= 1");
    const NullModel model(req.p, req.sigma);

    StatOptions opts = req.options;
    opts.s = req.s;
    std::vector<double> values(static_cast<std::size_t>(req.reps));
    parallel_for(values.size(), req.threads, [&](std::size_t r) {
        const Dataset d = null_dataset(req.n, req.p, req.seed, r, model.root_ptr());
        values[r] = compute_stat(req.stat, d, &model.sigma, opts).value;
    });
    return values;
}

/// Conservative empirical quantile: order statistic k = ceil(reps (1 - alpha))
/// for upper-side statistics (mirrored for lower-side), so at most a fraction
/// alpha of the null sample lies strictly beyond it.
inline double critical_value(std::vector<double> values, double alpha, RejectionSide side)
{
    if (values.empty())
        throw InvalidInput("empty null sample");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw InvalidInput("level must lie in (0, 1]");
    std::sort(values.begin(), values.end());
    const auto reps = static_cast<double>(values.size());
    auto k = static_cast<std::size_t>(std::ceil(reps * (1.0 - alpha) - 1e-9));
    k = std::clamp<std::size_t>(k, 1, values.size());
    return side == RejectionSide::upper ? values[k - 1] : values[values.size() - k];
}

/// Per-test level alpha / m.
inline double bonferroni_level(double alpha, std::uint64_t m)
{
    if (m < 1)
        throw InvalidInput("number of hypotheses must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw InvalidInput("level must lie in (0, 1]");
    return alpha / static_cast<double>(m);
}

/// Calibration entries for several levels from one null sample.
inline std::vector<CalibrationEntry>
calibrate_levels(const CalibrationRequest& req, const std::vector<double>& levels)
{
    if (req.reps < 100)
        throw InvalidInput("calibration needs at least 100 replications");
    const auto values = null_distribution(req);
    const RejectionSide side = rejection_side(req.stat);
    std::vector<CalibrationEntry> out;
    for (double level : levels) {
        CalibrationEntry e;
        e.key = CalibrationKey::make(req.stat, req.n, req.p, req.s, level);
        e.critical = critical_value(values, level, side);
        e.reps = req.reps;
        e.seed = req.seed;
        e.side = side;
        out.push_back(e);
    }
    return out;
}

inline CalibrationEntry calibrate(const CalibrationRequest& req)
{
    return calibrate_levels(req, {req.alpha}).front();
}

enum class Decision { retain, reject };

struct TestDecision
{
    Decision decision = Decision::retain;
    double value = 0.0;
    double critical = 0.0;
    RejectionSide side = RejectionSide::upper;

    bool rejected() const { return decision == Decision::reject; }
};

/// Reject iff the value lies strictly beyond the critical value.
inline TestDecision decide(const StatValue& stat, double critical)
{
    TestDecision t;
    t.value = stat.value;
    t.critical = critical;
    t.side = stat.rejection_side;
    const bool beyond = stat.rejection_side == RejectionSide::upper ? stat.value > critical
                                                                    : stat.value < critical;
    t.decision = beyond ? Decision::reject : Decision::retain;
    return t;
}

}  // namespace sparsemix
