// Regenerates the bundled synthetic data:
//   make_fixtures <out_dir>
// writes synthetic_prices.csv and synthetic_chain.csv.
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "bitlattice/fixture.hpp"
#include "bitlattice/market_data.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <out_dir>\n";
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "synthetic_prices.csv");
        bitlattice::write_price_csv(out, bitlattice::fixture::price_series());
    }
    {
        std::ofstream out(dir / "synthetic_chain.csv");
        bitlattice::fixture::write_chain_csv(out);
    }
    return 0;
}
