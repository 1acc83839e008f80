#ifndef CANNLV_SERIES_HPP
#define CANNLV_SERIES_HPP

#include <compare>
#include <stdexcept>
#include <string>
#include <vector>

namespace cannlv {

/// Error raised while reading malformed input data; carries the line number
/// when one is known.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg, long line = -1)
        : std::runtime_error(line >= 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

/// Calendar quarter, written "2007Q3".
struct Quarter {
    int year = 2000;
    int q = 1;  // 1..4

    static Quarter parse(const std::string& text);
    std::string str() const;

    /// Absolute quarter count, usable for gap and offset arithmetic.
    int index() const { return year * 4 + (q - 1); }
    static Quarter from_index(int idx) { return {idx / 4, idx % 4 + 1}; }
    Quarter next() const { return from_index(index() + 1); }

    friend auto operator<=>(const Quarter&, const Quarter&) = default;
};

/// Quarterly sales of one product: instantaneous units plus the running sum.
struct SalesSeries {
    std::string product_id;
    std::vector<Quarter> quarters;   // strictly increasing, no gaps
    std::vector<double> units;       // instantaneous, millions
    std::vector<double> cumulative;  // cumulative[i] = sum of units[0..i]

    std::size_t size() const { return units.size(); }

    static SalesSeries from_units(std::string product_id, Quarter start,
                                  std::vector<double> units);

    /// Throws ParseError on gaps, negative or non-finite units.
    void validate() const;
};

/// Reads `product,quarter,units` rows; one series per product id, ordered by
/// first appearance. Header row optional.
std::vector<SalesSeries> load_csv(const std::string& path);
std::vector<SalesSeries> parse_csv_text(const std::string& text);

void write_csv(const std::string& path, const std::vector<SalesSeries>& series);
std::string to_csv_text(const std::vector<SalesSeries>& series);

/// Centered moving average on the instantaneous units; endpoints use the
/// largest symmetric window that fits. Window must be odd and no longer than
/// the series.
SalesSeries moving_average(const SalesSeries& series, int window = 5);

}  // namespace cannlv

#endif
