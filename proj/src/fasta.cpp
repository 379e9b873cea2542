#include "mddb/fasta.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace mddb::seq {

std::vector<FastaRecord> read_fasta(std::istream& in) {
    std::vector<FastaRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '>') {
            records.push_back({line.substr(1), ""});
        } else {
            if (records.empty()) throw Error("fasta data before first header");
            records.back().sequence += line;
        }
    }
    return records;
}

std::vector<FastaRecord> read_fasta_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open fasta file: " + path);
    return read_fasta(in);
}

void write_fasta(std::ostream& out, const std::vector<FastaRecord>& records) {
    for (const auto& rec : records) {
        out << '>' << rec.header << '\n';
        for (size_t at = 0; at < rec.sequence.size(); at += 60)
            out << rec.sequence.substr(at, 60) << '\n';
        if (rec.sequence.empty()) out << '\n';
    }
}

}  // namespace mddb::seq
