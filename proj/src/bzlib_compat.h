// Minimal declarations for the stable libbz2 buffer API, for platforms where
// the runtime library is present without development headers. When a real
// <bzlib.h> is available it can be used instead; the ABI is identical.
#pragma once

#define BZ_OK 0
#define BZ_MEM_ERROR (-3)
#define BZ_DATA_ERROR (-4)
#define BZ_DATA_ERROR_MAGIC (-5)
#define BZ_UNEXPECTED_EOF (-7)
#define BZ_OUTBUFF_FULL (-8)

extern "C" {

int BZ2_bzBuffToBuffCompress(char* dest, unsigned int* destLen, char* source,
                             unsigned int sourceLen, int blockSize100k, int verbosity,
                             int workFactor);

int BZ2_bzBuffToBuffDecompress(char* dest, unsigned int* destLen, char* source,
                               unsigned int sourceLen, int small, int verbosity);

}  // extern "C"
