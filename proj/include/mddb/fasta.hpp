#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mddb/common.hpp"

namespace mddb::seq {

struct FastaRecord {
    std::string header;  // text after '>' up to the newline
    std::string sequence;
};

std::vector<FastaRecord> read_fasta(std::istream& in);
std::vector<FastaRecord> read_fasta_file(const std::string& path);

// Writes headers and sequence lines wrapped at 60 columns.
void write_fasta(std::ostream& out, const std::vector<FastaRecord>& records);

}  // namespace mddb::seq
