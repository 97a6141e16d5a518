/*
   Copyright 2026 The upbw Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#ifndef UPBW_RING_IO_HPP_
#define UPBW_RING_IO_HPP_

// Text form of an allocation instance:
//
//   S: 2 0 2
//   P: 2 2 0
//
// Blank lines and lines starting with '#' are ignored.

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "upbw/ring_alloc.hpp"

namespace upbw::ring {

inline std::vector<Units> parse_units(const std::string& text) {
    std::istringstream in(text);
    std::vector<Units> out;
    std::string token;
    while (in >> token) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(token, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("not an integer: '" + token + "'");
        }
        if (used != token.size()) throw std::invalid_argument("not an integer: '" + token + "'");
        out.push_back(v);
    }
    return out;
}

inline AllocationInstance parse_instance(std::istream& in) {
    AllocationInstance inst;
    bool have_s = false;
    bool have_p = false;
    std::string line;
    while (std::getline(in, line)) {
        const auto start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        const auto colon = line.find(':', start);
        if (colon == std::string::npos) throw std::invalid_argument("expected 'S:' or 'P:' line, got: " + line);
        std::string key = line.substr(start, colon - start);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        if (key == "S" && !have_s) {
            inst.s = parse_units(line.substr(colon + 1));
            have_s = true;
        } else if (key == "P" && !have_p) {
            inst.p = parse_units(line.substr(colon + 1));
            have_p = true;
        } else {
            throw std::invalid_argument("unexpected or repeated key '" + key + "'");
        }
    }
    if (!have_s || !have_p) throw std::invalid_argument("instance needs both an S: and a P: line");
    inst.validate();
    return inst;
}

inline AllocationInstance parse_instance(const std::string& text) {
    std::istringstream in(text);
    return parse_instance(in);
}

inline void write_instance(std::ostream& os, const AllocationInstance& inst) {
    os << "S:";
    for (Units v : inst.s) os << ' ' << v;
    os << "\nP:";
    for (Units v : inst.p) os << ' ' << v;
    os << '\n';
}

inline void write_rsum_csv(std::ostream& os, const std::vector<Units>& rsum) {
    os << "x_units,rsum_units\n";
    for (std::size_t x = 0; x < rsum.size(); ++x) os << x << ',' << rsum[x] << '\n';
}

}  // namespace upbw::ring

#endif  // UPBW_RING_IO_HPP_
