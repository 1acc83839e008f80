#include "cannlv/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace cannlv {

Quarter Quarter::parse(const std::string& text) {
    int year = 0, q = 0;
    char sep = 0;
    std::istringstream in(text);
    if (!(in >> year >> sep >> q) || (sep != 'Q' && sep != 'q') || q < 1 || q > 4 ||
        year < 1000 || year > 9999 || !in.eof()) {
        throw ParseError("bad quarter '" + text + "', expected YYYYQN format like 2007Q3");
    }
    return {year, q};
}

std::string Quarter::str() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04dQ%d", year, q);
    return buf;
}

SalesSeries SalesSeries::from_units(std::string product_id, Quarter start,
                                    std::vector<double> units) {
    SalesSeries s;
    s.product_id = std::move(product_id);
    s.units = std::move(units);
    s.quarters.reserve(s.units.size());
    s.cumulative.reserve(s.units.size());
    Quarter q = start;
    double running = 0;
    for (double u : s.units) {
        s.quarters.push_back(q);
        q = q.next();
        running += u;
        s.cumulative.push_back(running);
    }
    return s;
}

void SalesSeries::validate() const {
    if (quarters.size() != units.size() || cumulative.size() != units.size())
        throw ParseError("series '" + product_id + "': inconsistent column lengths");
    for (std::size_t i = 0; i < units.size(); ++i) {
        if (!std::isfinite(units[i]))
            throw ParseError("series '" + product_id + "': non-finite units at " +
                             quarters[i].str());
        if (units[i] < 0)
            throw ParseError("series '" + product_id + "': negative units at " +
                             quarters[i].str());
        if (i > 0 && quarters[i].index() != quarters[i - 1].index() + 1)
            throw ParseError("series '" + product_id + "': gap between " +
                             quarters[i - 1].str() + " and " + quarters[i].str());
    }
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<SalesSeries> parse_csv_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    long lineno = 0;

    struct Row {
        Quarter q;
        double units;
        long line;
    };
    std::vector<std::string> order;
    std::map<std::string, std::vector<Row>> rows;

    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (lineno == 1 && line.find("product") != std::string::npos &&
            line.find("quarter") != std::string::npos)
            continue;  // header

        std::istringstream ls(line);
        std::string product, quarter, units;
        if (!std::getline(ls, product, ',') || !std::getline(ls, quarter, ',') ||
            !std::getline(ls, units))
            throw ParseError("expected 'product,quarter,units'", lineno);
        product = trim(product);
        quarter = trim(quarter);
        units = trim(units);

        Quarter q{};
        try {
            q = Quarter::parse(quarter);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), lineno);
        }
        double u = 0;
        try {
            std::size_t pos = 0;
            u = std::stod(units, &pos);
            if (pos != units.size()) throw std::invalid_argument(units);
        } catch (const std::exception&) {
            throw ParseError("bad units value '" + units + "'", lineno);
        }
        if (!std::isfinite(u)) throw ParseError("non-finite units value", lineno);
        if (u < 0) throw ParseError("negative units value for " + product, lineno);

        if (!rows.count(product)) order.push_back(product);
        auto& vec = rows[product];
        for (const auto& r : vec)
            if (r.q == q)
                throw ParseError("duplicate (" + product + ", " + quarter + "), first at line " +
                                     std::to_string(r.line),
                                 lineno);
        vec.push_back({q, u, lineno});
    }

    std::vector<SalesSeries> out;
    for (const auto& product : order) {
        auto& vec = rows[product];
        std::sort(vec.begin(), vec.end(),
                  [](const Row& a, const Row& b) { return a.q < b.q; });
        for (std::size_t i = 1; i < vec.size(); ++i)
            if (vec[i].q.index() != vec[i - 1].q.index() + 1)
                throw ParseError("series '" + product + "': gap between " + vec[i - 1].q.str() +
                                     " and " + vec[i].q.str(),
                                 vec[i].line);
        std::vector<double> units;
        units.reserve(vec.size());
        for (const auto& r : vec) units.push_back(r.units);
        out.push_back(SalesSeries::from_units(product, vec.front().q, std::move(units)));
    }
    if (out.empty()) throw ParseError("no data rows found");
    return out;
}

std::vector<SalesSeries> load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv_text(buf.str());
}

std::string to_csv_text(const std::vector<SalesSeries>& series) {
    std::ostringstream out;
    out << "product,quarter,units\n";
    char num[64];
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.size(); ++i) {
            std::snprintf(num, sizeof(num), "%.17g", s.units[i]);
            out << s.product_id << ',' << s.quarters[i].str() << ',' << num << '\n';
        }
    return out.str();
}

void write_csv(const std::string& path, const std::vector<SalesSeries>& series) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << to_csv_text(series);
}

SalesSeries moving_average(const SalesSeries& series, int window) {
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("moving_average: window must be odd and positive");
    if (static_cast<std::size_t>(window) > series.size())
        throw std::invalid_argument("moving_average: window longer than series");

    const int n = static_cast<int>(series.size());
    const int half = window / 2;
    std::vector<double> smoothed(series.size());
    for (int i = 0; i < n; ++i) {
        int h = std::min({half, i, n - 1 - i});  // shrinking symmetric window at the edges
        double sum = 0;
        for (int j = i - h; j <= i + h; ++j) sum += series.units[static_cast<std::size_t>(j)];
        smoothed[static_cast<std::size_t>(i)] = sum / (2 * h + 1);
    }
    return SalesSeries::from_units(series.product_id + "_smoothed", series.quarters.front(),
                                   std::move(smoothed));
}

}  // namespace cannlv
