// Runs the twelve end-to-end criteria and prints one PASS/FAIL line each.
// Usage: acceptance_tests [--seed N] [--only 1,3,7]

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

#include "splitstream/config.hpp"
#include "splitstream/validate.hpp"

using namespace splitstream;

int main(int argc, char** argv) {
    SuiteOptions opt;
    opt.seed = default_seed(1);
    for (int a = 1; a < argc; ++a) {
        const std::string arg = argv[a];
        if (arg == "--seed" && a + 1 < argc) {
            opt.seed = std::stoull(argv[++a]);
        } else if (arg == "--only" && a + 1 < argc) {
            std::stringstream ss(argv[++a]);
            std::string id;
            while (std::getline(ss, id, ',')) opt.only.insert(std::stoi(id));
        } else {
            std::cerr << "usage: acceptance_tests [--seed N] [--only 1,3,7]\n";
            return 2;
        }
    }
    opt.progress = &std::cout;
    std::cout << "acceptance suite, seed " << opt.seed << std::endl;
    const auto report = run_acceptance_suite(opt);
    int failed = 0;
    for (const auto& r : report.rows) failed += r.verdict == Verdict::fail;
    std::cout << report.rows.size() - static_cast<std::size_t>(failed) << " of " << report.rows.size()
              << " criteria passed" << std::endl;
    return report.ok() ? EXIT_SUCCESS : EXIT_FAILURE;
}
