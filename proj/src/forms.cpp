// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#include "qkprz/forms.hpp"

#include <algorithm>
#include <bit>

namespace qkprz {
namespace {

struct SubsetTables {
  std::array<std::vector<int>, 5> by_size;
  std::array<int, 16> slot{};
  SubsetTables() {
    // Lexicographic order of sorted index tuples.
    for (int p = 0; p <= 4; ++p) {
      for (int m = 0; m < 16; ++m) {
        if (std::popcount(unsigned(m)) != p) continue;
        by_size[p].push_back(m);
      }
      std::sort(by_size[p].begin(), by_size[p].end(), [](int a, int b) {
        for (int i = 0; i < 4; ++i) {
          bool ia = a >> i & 1, ib = b >> i & 1;
          if (ia != ib) return ia;  // the tuple containing the smaller index first
        }
        return false;
      });
      for (size_t k = 0; k < by_size[p].size(); ++k) slot[by_size[p][k]] = int(k);
    }
  }
};

const SubsetTables& tables() {
  static const SubsetTables t;
  return t;
}

}  // namespace

const std::vector<int>& subsets(int p) { return tables().by_size[p]; }

int subset_slot(int mask) { return tables().slot[mask]; }

int wedge_sign(int mi, int mj) {
  if (mi & mj) return 0;
  // Count inversions: pairs (i in I, j in J) with i > j.
  int inv = 0;
  for (int i = 0; i < 4; ++i)
    if (mi >> i & 1)
      for (int j = 0; j < i; ++j)
        if (mj >> j & 1) ++inv;
  return inv % 2 ? -1 : 1;
}

Form1 differential(const Jet& f) {
  Form1 r;
  for (int x = 0; x < 4; ++x) r.c[x] = partial(f, x);
  return r;
}

Form1 holomorphic_part(const Form1& a) {
  Form1 r = a;
  r.c[2] = Jet(a.base(), a.order());
  r.c[3] = Jet(a.base(), a.order());
  return r;
}

Form1 antiholomorphic_part(const Form1& a) {
  Form1 r = a;
  r.c[0] = Jet(a.base(), a.order());
  r.c[1] = Jet(a.base(), a.order());
  return r;
}

}  // namespace qkprz
