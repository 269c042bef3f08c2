// Acceptance suite: runs every self-check criterion and prints one pass/fail
// line each. Exits nonzero if any criterion fails.

#include <chrono>
#include <cstdio>

#include "fourphoton/selfcheck.hpp"

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = fourphoton::run_selfchecks();
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    int failed = 0;
    for (const auto& r : results) {
        std::printf("[%s] %2d. %s\n", r.pass() ? "PASS" : "FAIL", r.id, r.title.c_str());
        for (const auto& s : r.subchecks) {
            if (!s.pass)
                std::printf("        FAIL %s: measured %s, expected %s\n", s.label.c_str(),
                            s.measured.c_str(), s.expected.c_str());
        }
        if (!r.pass()) ++failed;
    }
    std::printf("%d/%zu criteria passed in %.2f s\n", static_cast<int>(results.size()) - failed,
                results.size(), seconds);
    return failed == 0 ? 0 : 1;
}
