// Writes the synthetic category used by the end-to-end tests:
//   make_fixture <dir> [seed]
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "gradients/archive.hpp"
#include "gradients/synthetic.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: make_fixture <dir> [seed]\n";
        return 1;
    }
    const std::filesystem::path dir = argv[1];
    gradients::SyntheticSpec spec;
    if (argc > 2) spec.seed = std::strtoull(argv[2], nullptr, 10);
    try {
        std::filesystem::create_directories(dir);
        const auto corpus = gradients::make_synthetic_category(spec);
        std::string lines;
        for (const auto& e : corpus.events) lines += gradients::to_json_line(e) + "\n";
        gradients::write_file(dir / "events.jsonl", lines);
        gradients::write_file(dir / "category.json", gradients::to_json(corpus.category).dump(2) + "\n");
        gradients::write_file(dir / "toxicity.csv", gradients::toxicity_csv(corpus.toxicity));
        std::cout << corpus.events.size() << " events written to " << dir.string() << "\n";
    } catch (const gradients::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
