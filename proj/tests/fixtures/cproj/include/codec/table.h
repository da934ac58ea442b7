#ifndef CODEC_TABLE_H
#define CODEC_TABLE_H

#include <stdint.h>

extern const uint8_t kind_table[256];

uint8_t table_lookup(uint8_t k);

#endif
