#ifndef HAS_TIME_HPP
#define HAS_TIME_HPP

#include <cctype>
#include <compare>
#include <cstdint>
#include <string>

#include "has/errors.hpp"

namespace has {

// Time value in abstract time units, held exactly as an integer count of
// micro-units (10^-6). Durations in model files are decimal strings with at
// most six fractional digits; arithmetic never goes through floating point.
class Duration {
public:
    constexpr Duration() = default;

    static constexpr Duration from_micro(std::int64_t micro) {
        Duration d;
        d.micro_ = micro;
        return d;
    }
    static constexpr Duration from_units(std::int64_t units) {
        return from_micro(units * kScale);
    }

    static Duration parse(const std::string& text) {
        std::size_t i = 0;
        bool neg = false;
        if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
            neg = text[i] == '-';
            ++i;
        }
        std::int64_t whole = 0;
        std::size_t digits = 0;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            whole = whole * 10 + (text[i] - '0');
            ++i;
            ++digits;
        }
        std::int64_t frac = 0;
        std::size_t frac_digits = 0;
        if (i < text.size() && text[i] == '.') {
            ++i;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
                if (frac_digits >= 6)
                    throw Error(ErrorCode::MalformedModel,
                                "duration '" + text + "' has more than 6 fractional digits");
                frac = frac * 10 + (text[i] - '0');
                ++i;
                ++frac_digits;
            }
        }
        if (digits == 0 && frac_digits == 0)
            throw Error(ErrorCode::MalformedModel, "bad duration literal '" + text + "'");
        if (i != text.size())
            throw Error(ErrorCode::MalformedModel, "bad duration literal '" + text + "'");
        for (std::size_t k = frac_digits; k < 6; ++k) frac *= 10;
        std::int64_t micro = whole * kScale + frac;
        return from_micro(neg ? -micro : micro);
    }

    // Decimal rendering with trailing zeros trimmed: 1500000 -> "1.5".
    std::string str() const {
        std::int64_t m = micro_;
        std::string sign;
        if (m < 0) {
            sign = "-";
            m = -m;
        }
        std::int64_t whole = m / kScale;
        std::int64_t frac = m % kScale;
        std::string out = sign + std::to_string(whole);
        if (frac != 0) {
            std::string f = std::to_string(frac);
            f.insert(f.begin(), 6 - f.size(), '0');
            while (!f.empty() && f.back() == '0') f.pop_back();
            out += "." + f;
        }
        return out;
    }

    constexpr std::int64_t micro() const { return micro_; }
    constexpr bool is_zero() const { return micro_ == 0; }
    constexpr bool positive() const { return micro_ > 0; }

    // Exact scaling by num/den; throws if the result is not representable
    // in micro-units.
    Duration scaled(std::int64_t num, std::int64_t den) const {
        std::int64_t prod = micro_ * num;
        if (num != 0 && prod / num != micro_)
            throw Error(ErrorCode::MalformedModel, "duration scale overflow");
        if (prod % den != 0)
            throw Error(ErrorCode::MalformedModel,
                        "duration " + str() + " not exactly scalable by " +
                            std::to_string(num) + "/" + std::to_string(den));
        return from_micro(prod / den);
    }

    friend constexpr Duration operator+(Duration a, Duration b) {
        return from_micro(a.micro_ + b.micro_);
    }
    friend constexpr Duration operator-(Duration a, Duration b) {
        return from_micro(a.micro_ - b.micro_);
    }
    friend constexpr auto operator<=>(Duration, Duration) = default;

private:
    static constexpr std::int64_t kScale = 1000000;
    std::int64_t micro_ = 0;
};

// Instants share the representation; the alias marks intent.
using TimePoint = Duration;

}  // namespace has

#endif
