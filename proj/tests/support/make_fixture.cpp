// Writes the bundled synthetic fixture: ff_make_fixture <out.jsonl> [seed]

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "ff/corpus.hpp"
#include "synthetic_corpus.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: ff_make_fixture <out.jsonl> [seed]\n";
    return 1;
  }
  ff::testing::SyntheticCorpusSpec spec;
  if (argc > 2) spec.seed = std::strtoull(argv[2], nullptr, 10);
  const auto records = ff::testing::make_synthetic_corpus(spec);
  std::ofstream out(argv[1], std::ios::binary);
  ff::write_records(out, records);
  std::cerr << records.size() << " records\n";
  return out ? 0 : 1;
}
