#ifndef CODEC_BUFFER_H
#define CODEC_BUFFER_H

#include <stddef.h>
#include <stdint.h>

typedef struct buf {
  uint8_t *data;
  size_t cap;
  size_t used;
} buf_t;

int buf_init(buf_t *b, uint8_t *mem, size_t cap);
int buf_push(buf_t *b, uint8_t byte);
int buf_append(buf_t *b, const uint8_t *bytes, size_t n);

#endif
