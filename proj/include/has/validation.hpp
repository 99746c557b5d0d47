#ifndef HAS_VALIDATION_HPP
#define HAS_VALIDATION_HPP

#include <algorithm>
#include <ostream>
#include <string>
#include <vector>

namespace has {

enum class Severity { Error, Warning };

struct Violation {
    std::string rule;     // stable rule code, e.g. CONNECTOR_ARITY
    std::string element;  // offending element id
    std::string detail;
    Severity severity = Severity::Error;
};

class ValidationReport {
public:
    void error(std::string rule, std::string element, std::string detail = {}) {
        violations_.push_back({std::move(rule), std::move(element), std::move(detail),
                               Severity::Error});
    }
    void warn(std::string rule, std::string element, std::string detail = {}) {
        violations_.push_back({std::move(rule), std::move(element), std::move(detail),
                               Severity::Warning});
    }

    // Conformant means no errors; warnings are allowed.
    bool conformant() const {
        return std::none_of(violations_.begin(), violations_.end(),
                            [](const Violation& v) { return v.severity == Severity::Error; });
    }

    const std::vector<Violation>& violations() const { return violations_; }

    bool has_rule(const std::string& rule) const {
        return std::any_of(violations_.begin(), violations_.end(),
                           [&](const Violation& v) { return v.rule == rule; });
    }

    void merge(const ValidationReport& other) {
        violations_.insert(violations_.end(), other.violations_.begin(),
                           other.violations_.end());
    }

    friend std::ostream& operator<<(std::ostream& os, const ValidationReport& r) {
        for (const auto& v : r.violations_) {
            os << (v.severity == Severity::Error ? "error" : "warning") << " " << v.rule
               << " [" << v.element << "]";
            if (!v.detail.empty()) os << ": " << v.detail;
            os << "\n";
        }
        return os;
    }

private:
    std::vector<Violation> violations_;
};

}  // namespace has

#endif
