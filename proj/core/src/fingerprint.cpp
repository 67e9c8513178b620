#include "crowdslam/fingerprint.hpp"

#include <algorithm>
#include <cmath>

#include "crowdslam/error.hpp"

namespace crowdslam {

Fingerprint::Fingerprint(Readings readings) : readings_(std::move(readings)) {
    if (readings_.contains(ApId{})) {
        throw ValidationError("fingerprint: empty AP id");
    }
}

Fingerprint::Fingerprint(std::initializer_list<std::pair<const ApId, double>> readings)
    : Fingerprint(Readings(readings)) {}

void Fingerprint::set(const ApId& ap, double rss_dbm) {
    if (ap.empty()) {
        throw ValidationError("fingerprint: empty AP id");
    }
    readings_[ap] = rss_dbm;
}

Fingerprint threshold_fingerprint(const Fingerprint& fp, double theta_r) {
    Fingerprint::Readings kept;
    for (const auto& [ap, rss] : fp.readings()) {
        if (rss >= theta_r) {
            kept.emplace_hint(kept.end(), ap, rss);
        }
    }
    return Fingerprint(std::move(kept));
}

double signal_magnitude(double rss_dbm, double floor_dbm) noexcept {
    return std::max(0.0, rss_dbm - floor_dbm);
}

double cosine_similarity(const Fingerprint& a, const Fingerprint& b, double floor_dbm) {
    // Both maps are sorted by AP id, so a merge walk visits the union in a
    // fixed order. APs present on one side only add to that side's norm.
    double dot = 0.0;
    double norm_a = 0.0;
    double norm_b = 0.0;
    auto ia = a.readings().begin();
    auto ib = b.readings().begin();
    const auto ea = a.readings().end();
    const auto eb = b.readings().end();
    while (ia != ea || ib != eb) {
        if (ib == eb || (ia != ea && ia->first < ib->first)) {
            const double m = signal_magnitude(ia->second, floor_dbm);
            norm_a += m * m;
            ++ia;
        } else if (ia == ea || ib->first < ia->first) {
            const double m = signal_magnitude(ib->second, floor_dbm);
            norm_b += m * m;
            ++ib;
        } else {
            const double ma = signal_magnitude(ia->second, floor_dbm);
            const double mb = signal_magnitude(ib->second, floor_dbm);
            dot += ma * mb;
            norm_a += ma * ma;
            norm_b += mb * mb;
            ++ia;
            ++ib;
        }
    }
    if (norm_a == 0.0 || norm_b == 0.0) {
        return 0.0;
    }
    // sqrt of the product keeps a == b at exactly 1.
    return std::min(1.0, dot / std::sqrt(norm_a * norm_b));
}

std::size_t similarity_op_count(const Fingerprint& a, const Fingerprint& b) {
    std::size_t count = 0;
    auto ia = a.readings().begin();
    auto ib = b.readings().begin();
    const auto ea = a.readings().end();
    const auto eb = b.readings().end();
    while (ia != ea && ib != eb) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            ++ia;
            ++ib;
        }
        ++count;
    }
    return count + static_cast<std::size_t>(std::distance(ia, ea)) +
           static_cast<std::size_t>(std::distance(ib, eb));
}

}  // namespace crowdslam
