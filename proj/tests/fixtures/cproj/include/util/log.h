#ifndef UTIL_LOG_H
#define UTIL_LOG_H

/* Quiet by design: fuzz builds must not spam stdio. */
void log_line(const char *msg);
unsigned long log_count(void);

#endif
