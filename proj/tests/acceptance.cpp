// Runs every fixture check and prints one pass/fail line per check.

#include <lsm/verify.hpp>

#include <cstdio>

int main()
{
    int failed = 0;
    for (int id = 1; id <= lsm::check_count; ++id) {
        auto r = lsm::run_check(id);
        failed += ! r.passed;
        std::printf("[%s] %2d %-32s %8.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds, r.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %d checks passed\n", lsm::check_count - failed, lsm::check_count);
    return failed == 0 ? 0 : 1;
}
