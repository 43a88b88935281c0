#include "cmpsearch/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

namespace cmpsearch {

Answer answer_from_int(int v) {
    if (v == 1) return Answer::plus;
    if (v == -1) return Answer::minus;
    throw ProtocolError("answer must be +1 or -1, got " + std::to_string(v));
}

double Metric::distance(std::span<const double> a, std::span<const double> b) const {
    double acc = 0.0;
    if (kind == MetricKind::manhattan) {
        for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
        return acc;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

Metric Metric::parse(const std::string& name) {
    if (name == "euclidean" || name == "l2") return {MetricKind::euclidean};
    if (name == "manhattan" || name == "l1") return {MetricKind::manhattan};
    throw InputError("unknown metric '" + name + "'");
}

std::string Metric::name() const {
    return kind == MetricKind::euclidean ? "euclidean" : "manhattan";
}

Dataset::Dataset(std::string name, std::size_t dim, std::vector<double> features,
                 std::vector<std::string> columns)
    : name_(std::move(name)), dim_(dim), features_(std::move(features)), columns_(std::move(columns)) {
    if (dim_ == 0) throw InputError("dataset dimension must be at least 1");
    if (features_.empty() || features_.size() % dim_ != 0)
        throw InputError("dataset must hold at least one complete item");
    for (double v : features_)
        if (!std::isfinite(v)) throw InputError("dataset feature values must be finite");
    if (columns_.empty())
        for (std::size_t j = 0; j < dim_; ++j) columns_.push_back("x" + std::to_string(j));
}

Dataset Dataset::from_line(std::string name, const std::vector<double>& positions) {
    return Dataset(std::move(name), 1, positions, {"pos"});
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

bool parse_number(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

Dataset parse_csv(std::istream& in, const std::string& name, const CsvOptions& options) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw InputError(name + ": missing header row");

    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw InputError(name + ": row " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " columns, header has " +
                             std::to_string(header.size()));
        rows.emplace_back(line_no, std::move(cells));
    }
    if (rows.empty()) throw InputError(name + ": no data rows");

    int id_col = -1;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (lower(header[j]) == "id") id_col = static_cast<int>(j);

    struct Column {
        std::size_t source;
        bool categorical;
        std::vector<std::string> levels;
    };
    std::vector<Column> cols;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (static_cast<int>(j) == id_col || contains(options.ignore, header[j])) continue;
        double tmp;
        const bool cat = contains(options.categorical, header[j]) || !parse_number(rows.front().second[j], tmp);
        Column c{j, cat, {}};
        if (cat)
            for (const auto& [_, cells] : rows)
                if (!contains(c.levels, cells[j])) c.levels.push_back(cells[j]);
        cols.push_back(std::move(c));
    }

    std::vector<std::string> names;
    for (const auto& c : cols) {
        if (c.categorical)
            for (const auto& lv : c.levels) names.push_back(header[c.source] + "=" + lv);
        else
            names.push_back(header[c.source]);
    }
    const std::size_t dim = names.size();
    if (dim == 0) throw InputError(name + ": no feature columns");

    const std::size_t n = rows.size();
    std::vector<std::size_t> slot(n);
    std::iota(slot.begin(), slot.end(), 0);
    if (id_col >= 0) {
        std::vector<bool> seen(n, false);
        for (std::size_t r = 0; r < n; ++r) {
            const auto& cell = rows[r].second[static_cast<std::size_t>(id_col)];
            double v;
            if (!parse_number(cell, v) || v < 0 || v != std::floor(v) || v >= static_cast<double>(n) ||
                seen[static_cast<std::size_t>(v)])
                throw InputError(name + ": row " + std::to_string(rows[r].first) + ", column " +
                                 std::to_string(id_col + 1) + ": id '" + cell +
                                 "' is not a unique integer in [0, n)");
            seen[static_cast<std::size_t>(v)] = true;
            slot[r] = static_cast<std::size_t>(v);
        }
    }

    std::vector<double> features(n * dim, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& [row_no, cells] = rows[r];
        std::size_t k = 0;
        for (const auto& c : cols) {
            const auto& cell = cells[c.source];
            if (c.categorical) {
                for (const auto& lv : c.levels) features[slot[r] * dim + k++] = (cell == lv) ? 1.0 : 0.0;
            } else {
                double v;
                if (!parse_number(cell, v))
                    throw InputError(name + ": row " + std::to_string(row_no) + ", column " +
                                     std::to_string(c.source + 1) + " ('" + header[c.source] +
                                     "'): non-numeric value '" + cell + "'");
                features[slot[r] * dim + k++] = v;
            }
        }
    }
    return Dataset(name, dim, std::move(features), std::move(names));
}

Dataset load_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open dataset file '" + path + "'");
    auto stem = path.substr(path.find_last_of('/') + 1);
    if (auto dot = stem.rfind('.'); dot != std::string::npos) stem.resize(dot);
    return parse_csv(in, stem, options);
}

void write_csv(const Dataset& data, std::ostream& out) {
    for (std::size_t j = 0; j < data.dim(); ++j) out << (j ? "," : "") << data.columns()[j];
    out << '\n';
    char buf[64];
    for (ItemId i = 0; i < data.size(); ++i) {
        const auto p = data.point(i);
        for (std::size_t j = 0; j < p.size(); ++j) {
            auto [end, ec] = std::to_chars(buf, buf + sizeof buf, p[j]);
            out << (j ? "," : "") << std::string_view(buf, static_cast<std::size_t>(end - buf));
        }
        out << '\n';
    }
}

Dataset gen_l1_ball(std::size_t n, std::size_t dim, double radius, std::uint64_t seed) {
    if (n == 0 || dim == 0 || !(radius > 0.0))
        throw InputError("gen_l1_ball needs n >= 1, dim >= 1 and radius > 0");
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expo(1.0);
    std::bernoulli_distribution sign(0.5);
    std::vector<double> features(n * dim);
    std::vector<double> e(dim + 1);
    for (std::size_t i = 0; i < n; ++i) {
        // d+1 exponential spacings normalized give a uniform point of the
        // simplex interior {x >= 0, sum x <= 1}; random signs fill the ball.
        double total = 0.0;
        for (auto& v : e) total += (v = expo(rng));
        for (std::size_t j = 0; j < dim; ++j) {
            const double v = radius * e[j] / total;
            features[i * dim + j] = sign(rng) ? -v : v;
        }
    }
    std::vector<std::string> cols;
    for (std::size_t j = 0; j < dim; ++j) cols.push_back("x" + std::to_string(j));
    return Dataset("l1ball_n" + std::to_string(n) + "_d" + std::to_string(dim), dim, std::move(features),
                   std::move(cols));
}

Prior::Prior(std::vector<double> masses) : mass_(std::move(masses)) {
    if (mass_.empty()) throw InputError("prior needs at least one item");
    double total = 0.0;
    for (double m : mass_) {
        if (!(m >= 0.0) || !std::isfinite(m)) throw InputError("prior masses must be finite and nonnegative");
        total += m;
    }
    if (!(total > 0.0)) throw InputError("prior masses must not all be zero");
    for (auto& m : mass_) m /= total;
}

std::vector<ItemId> Prior::support() const {
    std::vector<ItemId> out;
    for (ItemId i = 0; i < mass_.size(); ++i)
        if (mass_[i] > 0.0) out.push_back(i);
    return out;
}

Prior Prior::uniform(std::size_t n) { return Prior(std::vector<double>(n, 1.0)); }

Prior Prior::powerlaw(std::size_t n, double alpha, std::uint64_t seed, bool identity) {
    if (!(alpha >= 0.0)) throw InputError("power-law exponent must be nonnegative");
    std::vector<ItemId> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    if (!identity) {
        std::mt19937_64 rng(seed);
        std::shuffle(perm.begin(), perm.end(), rng);
    }
    std::vector<double> w(n);
    for (std::size_t r = 0; r < n; ++r) w[perm[r]] = std::pow(static_cast<double>(r + 1), -alpha);
    return Prior(std::move(w));
}

PriorSpec PriorSpec::parse(const std::string& text) {
    PriorSpec spec;
    if (text == "uniform") {
        spec.kind = Kind::uniform;
        return spec;
    }
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() >= 2 && parts.size() <= 3 && parts[0] == "powerlaw") {
        if (!parse_number(parts[1], spec.alpha) || spec.alpha < 0)
            throw InputError("bad power-law exponent in prior '" + text + "'");
        if (parts.size() == 3) {
            if (parts[2] != "identity") throw InputError("unknown prior option '" + parts[2] + "'");
            spec.identity = true;
        }
        return spec;
    }
    throw InputError("unknown prior '" + text + "' (expected uniform or powerlaw:ALPHA[:identity])");
}

std::string PriorSpec::str() const {
    if (kind == Kind::uniform) return "uniform";
    std::ostringstream os;
    os << "powerlaw:" << alpha << (identity ? ":identity" : "");
    return os.str();
}

Prior PriorSpec::make(std::size_t n, std::uint64_t seed) const {
    return kind == Kind::uniform ? Prior::uniform(n) : Prior::powerlaw(n, alpha, seed, identity);
}

double entropy_bits(const Prior& prior) {
    double h = 0.0;
    for (double m : prior.masses())
        if (m > 0.0) h += m * std::log2(1.0 / m);
    return h;
}

double hmax_bits(const Prior& prior) {
    double h = 0.0;
    for (double m : prior.masses())
        if (m > 0.0) h = std::max(h, std::log2(1.0 / m));
    return h;
}

double doubling_constant(const Dataset& data, const Metric& metric, const Prior& prior) {
    const std::size_t n = data.size();
    double best = 1.0;
#pragma omp parallel
    {
        std::vector<std::pair<double, ItemId>> by_dist(n);
        std::vector<double> dist(n);
        std::vector<double> prefix(n + 1);
        double local = 1.0;
#pragma omp for schedule(dynamic, 8)
        for (std::size_t xi = 0; xi < n; ++xi) {
            const auto x = static_cast<ItemId>(xi);
            if (!prior.in_support(x)) continue;
            for (ItemId y = 0; y < n; ++y) by_dist[y] = {metric.distance(data.point(x), data.point(y)), y};
            std::sort(by_dist.begin(), by_dist.end());
            prefix[0] = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                dist[k] = by_dist[k].first;
                prefix[k + 1] = prefix[k] + prior[by_dist[k].second];
            }
            auto ball = [&](double r) {
                return prefix[static_cast<std::size_t>(std::upper_bound(dist.begin(), dist.end(), r) - dist.begin())];
            };
            for (std::size_t k = 0; k < n; ++k) {
                if (k > 0 && dist[k] == dist[k - 1]) continue;
                for (double r : {dist[k], dist[k] / 2}) local = std::max(local, ball(2 * r) / ball(r));
            }
        }
#pragma omp critical
        best = std::max(best, local);
    }
    return best;
}

namespace serial {

double doubling_constant(const Dataset& data, const Metric& metric, const Prior& prior) {
    const std::size_t n = data.size();
    double best = 1.0;
    std::vector<double> d(n);
    for (ItemId x = 0; x < n; ++x) {
        if (!prior.in_support(x)) continue;
        for (ItemId y = 0; y < n; ++y) d[y] = metric.distance(data.point(x), data.point(y));
        auto ball_mass = [&](double r) {
            std::vector<std::pair<double, ItemId>> members;
            for (ItemId y = 0; y < n; ++y)
                if (d[y] <= r) members.emplace_back(d[y], y);
            std::sort(members.begin(), members.end());
            double m = 0.0;
            for (const auto& [_, y] : members) m += prior[y];
            return m;
        };
        for (ItemId y = 0; y < n; ++y)
            for (double r : {d[y], d[y] / 2}) best = std::max(best, ball_mass(2 * r) / ball_mass(r));
    }
    return best;
}

}  // namespace serial

DatasetStats compute_stats(const Dataset& data, const Metric& metric, const Prior& prior) {
    if (prior.size() != data.size()) throw InputError("prior size does not match dataset size");
    return {data.size(), data.dim(), entropy_bits(prior), hmax_bits(prior), doubling_constant(data, metric, prior)};
}

nlohmann::json to_json(const DatasetStats& s) {
    return {{"n", s.n},
            {"dim", s.dim},
            {"entropy_bits", s.entropy_bits},
            {"hmax_bits", s.hmax_bits},
            {"doubling_constant", s.doubling_constant}};
}

}  // namespace cmpsearch
