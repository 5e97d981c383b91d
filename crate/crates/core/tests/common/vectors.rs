//! Hand-computed instruction vectors: (mnemonic, source, initial state, expected state).
//!
//! Source lines are separated by `/` and assembled at 0x0020. State is a
//! list of `KEY=hex` items: ACC P T AR0..AR7 ARP ARB DP OV OVM SXM INTM TC
//! CNF PM XF IMR TOS S[i] D[addr] M[addr] ADC RDY WS, plus PC DAC RUN IDLE
//! CYC in expectations. DP defaults to 6, so direct operand 10h is 0x310.

use dsp25::asm::{assemble, AsmOptions};
use dsp25::board::{Board, BoardConfig};
use dsp25::object::Space;

pub type Vector = (&'static str, &'static str, &'static str, &'static str);

pub const VECTORS: &[Vector] = &[
    ("ABS", "ABS", "ACC=FFFFFFFB", "ACC=00000005 OV=0"),
    ("ABS", "ABS", "ACC=80000000", "ACC=80000000 OV=1"),
    ("ABS", "ABS", "ACC=80000000 OVM=1", "ACC=7FFFFFFF OV=1"),
    ("ABS", "ABS", "ACC=00001234", "ACC=00001234 OV=0"),
    ("ADD", "ADD 10h", "ACC=3 D[310]=5", "ACC=8"),
    ("ADD", "ADD 10h,4", "D[310]=FFFF", "ACC=FFFFFFF0"),
    ("ADD", "ADD 10h,4", "D[310]=FFFF SXM=0", "ACC=000FFFF0"),
    ("ADD", "ADD 10h,15", "ACC=7FFFFFFF D[310]=1 OVM=1", "ACC=7FFFFFFF OV=1"),
    ("ADD", "ADD 10h", "ACC=7FFFFFFF D[310]=1", "ACC=80000000 OV=1"),
    ("ADD", "ADD *+,1,AR2", "ARP=1 AR1=0310 D[310]=3", "ACC=6 AR1=0311 ARP=2 ARB=1"),
    ("ADDH", "ADDH 10h", "ACC=5 D[310]=1", "ACC=00010005"),
    ("ADDH", "ADDH 10h", "D[310]=FFFF", "ACC=FFFF0000"),
    ("ADDH", "ADDH 10h", "ACC=7FFF0000 D[310]=1 OVM=1", "ACC=7FFFFFFF OV=1"),
    ("ADDK", "ADDK 0FFh", "ACC=1", "ACC=00000100"),
    ("ADDK", "ADDK 1", "ACC=FFFFFFFF", "ACC=0 OV=0"),
    ("ADDK", "ADDK 1", "ACC=7FFFFFFF OVM=1", "ACC=7FFFFFFF OV=1"),
    ("ADDS", "ADDS 10h", "D[310]=FFFF", "ACC=0000FFFF"),
    ("ADDS", "ADDS 10h", "ACC=00010000 D[310]=8000", "ACC=00018000"),
    ("ADDS", "ADDS 10h", "ACC=7FFFFFFF D[310]=1 OVM=1", "ACC=7FFFFFFF OV=1"),
    ("ADLK", "ADLK 1234h", "", "ACC=00001234"),
    ("ADLK", "ADLK 8000h", "", "ACC=FFFF8000"),
    ("ADLK", "ADLK 8000h", "SXM=0", "ACC=00008000"),
    ("ADLK", "ADLK 1,15", "ACC=1", "ACC=00008001"),
    ("AND", "AND 10h", "ACC=12345678 D[310]=0F0F", "ACC=00000608"),
    ("AND", "AND 10h", "ACC=FFFFFFFF D[310]=8001", "ACC=00008001"),
    ("AND", "AND 10h", "ACC=0000FFFF D[310]=0", "ACC=0"),
    ("APAC", "APAC", "ACC=5 P=3", "ACC=8"),
    ("APAC", "APAC", "ACC=5 P=3 PM=1", "ACC=0B"),
    ("APAC", "APAC", "ACC=5 P=3 PM=2", "ACC=35"),
    ("APAC", "APAC", "ACC=5 P=FFFFFF80 PM=3", "ACC=3"),
    ("APAC", "APAC", "ACC=7FFFFFFF P=1 OVM=1", "ACC=7FFFFFFF OV=1"),
    ("B", "B 40h", "", "PC=40"),
    ("B", "B 40h,*+,AR3", "AR0=5", "PC=40 AR0=6 ARP=3"),
    ("B", "B 20h", "ACC=7", "PC=20 ACC=7"),
    ("BANZ", "BANZ 40h", "ARP=1 AR1=3", "PC=40 AR1=2"),
    ("BANZ", "BANZ 40h", "ARP=1 AR1=0", "PC=22 AR1=FFFF"),
    ("BANZ", "BANZ 40h,*+,AR2", "ARP=1 AR1=5", "PC=40 AR1=6 ARP=2"),
    ("BGEZ", "BGEZ 40h", "ACC=0", "PC=40"),
    ("BGEZ", "BGEZ 40h", "ACC=FFFFFFFF", "PC=22"),
    ("BGEZ", "BGEZ 40h", "ACC=7FFFFFFF", "PC=40"),
    ("BGZ", "BGZ 40h", "ACC=0", "PC=22"),
    ("BGZ", "BGZ 40h", "ACC=1", "PC=40"),
    ("BGZ", "BGZ 40h", "ACC=80000000", "PC=22"),
    ("BLEZ", "BLEZ 40h", "ACC=0", "PC=40"),
    ("BLEZ", "BLEZ 40h", "ACC=1", "PC=22"),
    ("BLEZ", "BLEZ 40h", "ACC=FFFFFFFF", "PC=40"),
    ("BLZ", "BLZ 40h", "ACC=0", "PC=22"),
    ("BLZ", "BLZ 40h", "ACC=80000000", "PC=40"),
    ("BLZ", "BLZ 40h", "ACC=1", "PC=22"),
    ("BNZ", "BNZ 40h", "ACC=0", "PC=22"),
    ("BNZ", "BNZ 40h", "ACC=00010000", "PC=40"),
    ("BNZ", "BNZ 40h", "ACC=FFFFFFFF", "PC=40"),
    ("BV", "BV 40h", "OV=1", "PC=40 OV=0"),
    ("BV", "BV 40h", "OV=0", "PC=22"),
    ("BV", "ADDK 1 / BV 40h", "ACC=7FFFFFFF", "PC=40 OV=0 ACC=80000000"),
    ("BZ", "BZ 40h", "ACC=0", "PC=40"),
    ("BZ", "BZ 40h", "ACC=1", "PC=22"),
    ("BZ", "BZ 40h", "ACC=00010000", "PC=22"),
    ("CALL", "CALL 40h", "", "PC=40 TOS=22"),
    ("CALL", "CALL 40h", "TOS=1111", "PC=40 TOS=22 S[1]=1111"),
    ("CALL", "CALL 40h,*-", "AR0=5", "PC=40 AR0=4"),
    ("CMPL", "CMPL", "ACC=0", "ACC=FFFFFFFF"),
    ("CMPL", "CMPL", "ACC=12345678", "ACC=EDCBA987"),
    ("CMPL", "CMPL", "ACC=80000000", "ACC=7FFFFFFF OV=0"),
    ("CNFD", "CNFD", "CNF=1", "CNF=0"),
    ("CNFD", "CNFD", "CNF=0", "CNF=0 PC=21"),
    ("CNFD", "CNFP / CNFD", "", "CNF=0"),
    ("CNFP", "CNFP", "CNF=0", "CNF=1"),
    ("CNFP", "CNFP", "CNF=1", "CNF=1 PC=21"),
    ("CNFP", "CNFD / CNFP", "", "CNF=1"),
    ("DINT", "DINT", "INTM=0", "INTM=1"),
    ("DINT", "DINT", "INTM=1", "INTM=1"),
    ("DINT", "EINT / DINT", "", "INTM=1"),
    ("DMOV", "DMOV 10h", "D[310]=1234", "D[311]=1234 D[310]=1234"),
    ("DMOV", "DMOV *-", "AR0=0315 D[315]=ABCD", "D[316]=ABCD AR0=0314"),
    ("DMOV", "DMOV 7Fh", "D[37F]=42", "D[380]=42"),
    ("EINT", "EINT", "INTM=1", "INTM=0"),
    ("EINT", "DINT / EINT", "", "INTM=0"),
    ("EINT", "EINT", "ACC=5", "INTM=0 ACC=5"),
    ("IDLE", "IDLE", "", "IDLE=1 PC=21"),
    ("IDLE", "IDLE", "ACC=5 INTM=0", "IDLE=1 ACC=5"),
    ("IDLE", "NOP / IDLE", "", "IDLE=1 PC=22"),
    ("IN", "IN 10h,0", "ADC=0123 RDY=1", "D[310]=0123 RDY=0"),
    ("IN", "IN 10h,2", "RDY=1", "D[310]=0003"),
    ("IN", "IN 10h,5", "D[310]=FFFF", "D[310]=0"),
    ("IN", "IN *+,0", "AR0=0310 ADC=0FFF", "D[310]=0FFF AR0=0311"),
    ("LAC", "LAC 10h", "D[310]=8000", "ACC=FFFF8000"),
    ("LAC", "LAC 10h", "D[310]=8000 SXM=0", "ACC=00008000"),
    ("LAC", "LAC 10h,4", "D[310]=1234", "ACC=00012340"),
    ("LAC", "LAC 10h,15", "D[310]=FFFF", "ACC=FFFF8000"),
    ("LACK", "LACK 0FFh", "ACC=FFFFFFFF", "ACC=000000FF"),
    ("LACK", "LACK 0", "ACC=12345678", "ACC=0"),
    ("LACK", "LACK 80h", "", "ACC=00000080"),
    ("LALK", "LALK 1234h", "", "ACC=00001234"),
    ("LALK", "LALK 0FFFFh", "", "ACC=FFFFFFFF"),
    ("LALK", "LALK 0FFFFh", "SXM=0", "ACC=0000FFFF"),
    ("LALK", "LALK 1,15", "ACC=5", "ACC=00008000"),
    ("LAR", "LAR AR3,10h", "D[310]=ABCD", "AR3=ABCD"),
    ("LAR", "LAR AR1,*+", "ARP=1 AR1=0310 D[310]=55", "AR1=55"),
    ("LAR", "LAR AR2,*-,AR4", "AR0=0312 D[312]=0777", "AR2=0777 AR0=0311 ARP=4"),
    ("LARK", "LARK AR5,0FFh", "", "AR5=FF"),
    ("LARK", "LARK AR0,0", "AR0=1234", "AR0=0"),
    ("LARK", "LARK AR7,80h", "", "AR7=80"),
    ("LARP", "LARP AR3", "", "ARP=3 ARB=0"),
    ("LARP", "LARP AR5", "ARP=2", "ARP=5 ARB=2"),
    ("LARP", "LARP 1", "", "ARP=1"),
    ("LDP", "LDP 10h", "D[310]=7", "DP=7"),
    ("LDP", "LDP 10h", "D[310]=FFFF", "DP=1FF"),
    ("LDP", "LDP 10h", "D[310]=0200", "DP=0"),
    ("LDPK", "LDPK 1FFh", "", "DP=1FF"),
    ("LDPK", "LDPK 0", "", "DP=0"),
    ("LDPK", "LDPK 6", "DP=0", "DP=6"),
    ("LRLK", "LRLK AR1,0FFFFh", "", "AR1=FFFF"),
    ("LRLK", "LRLK AR7,1234h", "", "AR7=1234"),
    ("LRLK", "LRLK AR0,0", "AR0=5", "AR0=0"),
    ("LST", "LST 10h", "D[010]=5E07 INTM=0", "ARP=2 OV=1 OVM=1 INTM=0 DP=7"),
    ("LST", "LST 10h", "D[010]=0 INTM=1 OV=1", "ARP=0 OV=0 OVM=0 DP=0 INTM=1"),
    ("LST", "LST *", "AR0=0310 D[310]=2001", "ARP=1 DP=1"),
    ("LST1", "LST1 10h", "D[010]=3C03", "ARB=1 ARP=1 CNF=1 TC=1 SXM=1 PM=3"),
    ("LST1", "LST1 10h", "D[010]=0", "SXM=0 PM=0 ARB=0 ARP=0"),
    ("LST1", "LST1 10h", "D[010]=E000 ARP=2", "ARB=7 ARP=7 SXM=0"),
    ("LT", "LT 10h", "D[310]=8001", "T=8001"),
    ("LT", "LT *+", "AR0=0310 D[310]=5", "T=5 AR0=0311"),
    ("LT", "LT 10h", "ACC=9 P=4 D[310]=2", "T=2 ACC=9 P=4"),
    ("LTA", "LTA 10h", "P=10 ACC=5 D[310]=3", "T=3 ACC=15"),
    ("LTA", "LTA 10h", "P=10 ACC=5 D[310]=3 PM=1", "T=3 ACC=25"),
    ("LTA", "LTA 10h", "P=1 ACC=7FFFFFFF OVM=1", "ACC=7FFFFFFF OV=1"),
    ("LTD", "LTD 10h", "D[310]=7 P=2 ACC=1", "T=7 D[311]=7 ACC=3"),
    ("LTD", "LTD *-", "AR0=0311 D[311]=1111", "T=1111 D[312]=1111 AR0=0310"),
    ("LTD", "LTD 10h", "P=1 PM=2", "ACC=10"),
    ("MAC", "MAC 40h,10h", "M[40]=3 D[310]=5 P=2 ACC=1", "ACC=3 T=5 P=0F"),
    ("MAC", "MAC 40h,10h", "M[40]=FFFF D[310]=2", "ACC=0 P=FFFFFFFE"),
    (
        "MAC",
        "RPTK 2 / MAC 40h,*+",
        "AR0=0310 D[310]=1 D[311]=2 D[312]=3 M[40]=4 M[41]=5 M[42]=6",
        "ACC=0E P=12 T=3 AR0=0313",
    ),
    ("MACD", "MACD 40h,10h", "M[40]=2 D[310]=4 P=1", "ACC=1 T=4 P=8 D[311]=4"),
    (
        "MACD",
        "RPTK 1 / MACD 40h,*-",
        "AR0=0311 D[310]=1 D[311]=2 M[40]=3 M[41]=5",
        "ACC=6 P=5 T=1 D[312]=2 D[311]=1 AR0=030F",
    ),
    ("MACD", "MACD 40h,10h", "ACC=7FFFFFFF P=1 OVM=1", "ACC=7FFFFFFF OV=1"),
    ("MAR", "MAR *+", "AR0=5", "AR0=6"),
    ("MAR", "MAR *0+", "ARP=1 AR1=10 AR0=4", "AR1=14"),
    ("MAR", "MAR *BR0+", "ARP=2 AR2=4 AR0=4", "AR2=2"),
    ("MAR", "MAR 10h", "AR0=5 ACC=3", "AR0=5 ACC=3 ARP=0"),
    ("MPY", "MPY 10h", "T=3 D[310]=FFFE", "P=FFFFFFFA"),
    ("MPY", "MPY 10h", "T=8000 D[310]=8000", "P=40000000"),
    ("MPY", "MPY 10h", "T=7FFF D[310]=7FFF", "P=3FFF0001"),
    ("MPYK", "MPYK 4095", "T=2", "P=1FFE"),
    ("MPYK", "MPYK -4096", "T=2", "P=FFFFE000"),
    ("MPYK", "MPYK 5", "T=FFFF", "P=FFFFFFFB"),
    ("NEG", "NEG", "ACC=5", "ACC=FFFFFFFB"),
    ("NEG", "NEG", "ACC=80000000", "ACC=80000000 OV=1"),
    ("NEG", "NEG", "ACC=80000000 OVM=1", "ACC=7FFFFFFF OV=1"),
    ("NEG", "NEG", "ACC=0", "ACC=0 OV=0"),
    ("NOP", "NOP", "ACC=5", "ACC=5 PC=21 CYC=1"),
    ("NOP", "NOP", "WS=2", "PC=21 CYC=3"),
    ("NOP", "NOP / NOP", "OV=1", "OV=1 PC=22 CYC=2"),
    ("OR", "OR 10h", "ACC=12340000 D[310]=00FF", "ACC=123400FF"),
    ("OR", "OR 10h", "ACC=0000F000 D[310]=0F0F", "ACC=0000FF0F"),
    ("OR", "OR 10h", "ACC=FFFF0000 D[310]=8000", "ACC=FFFF8000"),
    ("OUT", "OUT 10h,1", "D[310]=0ABC", "DAC=0ABC"),
    ("OUT", "OUT 10h,3", "D[310]=10", "RUN=1"),
    ("OUT", "OUT *+,1", "AR0=0310 D[310]=0123", "DAC=0123 AR0=0311"),
    ("PAC", "PAC", "P=12345678", "ACC=12345678"),
    ("PAC", "PAC", "P=40000000 PM=1", "ACC=80000000 OV=0"),
    ("PAC", "PAC", "P=1000 PM=3", "ACC=40"),
    ("POP", "POP", "TOS=1234 S[1]=5678 ACC=FFFFFFFF", "ACC=00001234 TOS=5678"),
    ("POP", "POP", "S[7]=ABCD", "S[6]=ABCD S[7]=ABCD"),
    ("POP", "POP", "TOS=8000", "ACC=00008000"),
    ("PUSH", "PUSH", "ACC=12345678", "TOS=5678"),
    ("PUSH", "PUSH", "ACC=2 TOS=1111", "TOS=2 S[1]=1111"),
    ("PUSH", "PUSH", "S[6]=6666 S[7]=7777", "S[7]=6666"),
    ("RET", "RET", "TOS=40", "PC=40"),
    ("RET", "RET", "TOS=40 S[1]=1111", "TOS=1111"),
    ("RET", "RET", "TOS=0123 S[7]=7777", "PC=0123 S[6]=7777"),
    ("ROVM", "ROVM", "OVM=1", "OVM=0"),
    ("ROVM", "SOVM / ROVM", "", "OVM=0"),
    ("ROVM", "ROVM / ADDK 1", "ACC=7FFFFFFF OVM=1", "ACC=80000000 OV=1"),
    ("RPT", "RPT 10h / ADDK 1", "D[310]=3", "ACC=4"),
    ("RPT", "RPT 10h / ADDK 1", "D[310]=0", "ACC=1"),
    ("RPT", "RPT 10h / ADDK 1", "D[310]=0102", "ACC=3"),
    ("RPTK", "RPTK 4 / SFL", "ACC=1", "ACC=20"),
    ("RPTK", "RPTK 0 / ADDK 5", "", "ACC=5"),
    ("RPTK", "RPTK 255 / ADDK 1", "", "ACC=100"),
    ("RSXM", "RSXM", "", "SXM=0"),
    ("RSXM", "RSXM / LAC 10h", "D[310]=8000", "ACC=00008000"),
    ("RSXM", "RSXM / SFR", "ACC=80000000", "ACC=40000000"),
    ("SACH", "SACH 10h", "ACC=12345678", "D[310]=1234"),
    ("SACH", "SACH 10h,4", "ACC=12345678", "D[310]=2345 ACC=12345678"),
    ("SACH", "SACH 10h,1", "ACC=80000000", "D[310]=0"),
    ("SACH", "SACH 10h,7", "ACC=FEDCBA98", "D[310]=6E5D"),
    ("SACL", "SACL 10h", "ACC=12345678", "D[310]=5678"),
    ("SACL", "SACL 10h,4", "ACC=12345678", "D[310]=6780"),
    ("SACL", "SACL 10h,7", "ACC=0000FFFF", "D[310]=FF80"),
    ("SAR", "SAR AR3,10h", "AR3=ABCD", "D[310]=ABCD"),
    ("SAR", "SAR AR0,*+", "AR0=0310", "D[310]=0310 AR0=0311"),
    ("SAR", "SAR AR1,*0+,AR2", "ARP=1 AR1=0312 AR0=2", "D[312]=0312 AR1=0314 ARP=2"),
    ("SBLK", "SBLK 1", "ACC=10", "ACC=0F"),
    ("SBLK", "SBLK 8000h", "", "ACC=00008000"),
    ("SBLK", "SBLK 8000h", "SXM=0", "ACC=FFFF8000"),
    ("SBLK", "SBLK 1,4", "", "ACC=FFFFFFF0"),
    ("SFL", "SFL", "ACC=1", "ACC=2"),
    ("SFL", "SFL", "ACC=80000001", "ACC=00000002"),
    ("SFL", "SFL", "ACC=40000000", "ACC=80000000 OV=0"),
    ("SFR", "SFR", "ACC=80000000", "ACC=C0000000"),
    ("SFR", "SFR", "ACC=80000000 SXM=0", "ACC=40000000"),
    ("SFR", "SFR", "ACC=3", "ACC=1"),
    ("SOVM", "SOVM", "", "OVM=1"),
    ("SOVM", "SOVM / ADDK 1", "ACC=7FFFFFFF", "ACC=7FFFFFFF OV=1"),
    ("SOVM", "ROVM / SOVM", "", "OVM=1"),
    ("SPAC", "SPAC", "ACC=10 P=3", "ACC=0D"),
    ("SPAC", "SPAC", "P=1 PM=2", "ACC=FFFFFFF0"),
    ("SPAC", "SPAC", "ACC=80000000 P=1 OVM=1", "ACC=80000000 OV=1"),
    ("SPM", "SPM 3", "", "PM=3"),
    ("SPM", "SPM 0", "PM=2", "PM=0"),
    ("SPM", "SPM 1 / PAC", "P=2", "ACC=4 PM=1"),
    ("SST", "SST 10h", "ARP=2 OV=1 INTM=1", "D[010]=5606"),
    ("SST", "SST 10h", "OVM=1 INTM=0 DP=1FF", "D[010]=0DFF"),
    ("SST", "SST *", "AR0=0300", "D[300]=0606"),
    ("SST1", "SST1 10h", "ARB=3 CNF=1 PM=2", "D[010]=7582"),
    ("SST1", "SST1 10h", "SXM=0", "D[010]=0180"),
    ("SST1", "LST1 10h / SST1 11h", "D[010]=FFFF", "D[011]=FFFF"),
    ("SSXM", "SSXM", "SXM=0", "SXM=1"),
    ("SSXM", "SSXM / LAC 10h", "SXM=0 D[310]=8000", "ACC=FFFF8000"),
    ("SSXM", "RSXM / SSXM", "", "SXM=1"),
    ("SUB", "SUB 10h", "ACC=5 D[310]=3", "ACC=2"),
    ("SUB", "SUB 10h,8", "D[310]=1", "ACC=FFFFFF00"),
    ("SUB", "SUB 10h", "D[310]=FFFF SXM=0", "ACC=FFFF0001"),
    ("SUB", "SUB 10h", "ACC=80000000 D[310]=1 OVM=1", "ACC=80000000 OV=1"),
    ("SUBH", "SUBH 10h", "ACC=00050000 D[310]=1", "ACC=00040000"),
    ("SUBH", "SUBH 10h", "D[310]=FFFF", "ACC=00010000"),
    ("SUBH", "SUBH 10h", "ACC=80000000 D[310]=1 OVM=1", "ACC=80000000 OV=1"),
    ("SUBK", "SUBK 10h", "ACC=10", "ACC=0"),
    ("SUBK", "SUBK 1", "", "ACC=FFFFFFFF"),
    ("SUBK", "SUBK 0FFh", "ACC=100", "ACC=1"),
    ("SUBS", "SUBS 10h", "ACC=00010000 D[310]=FFFF", "ACC=00000001"),
    ("SUBS", "SUBS 10h", "D[310]=8000", "ACC=FFFF8000"),
    ("SUBS", "SUBS 10h", "ACC=80000000 D[310]=1 OVM=1", "ACC=80000000 OV=1"),
    ("TBLR", "TBLR 10h", "ACC=40 M[40]=BEEF", "D[310]=BEEF"),
    (
        "TBLR",
        "RPTK 2 / TBLR *+",
        "AR0=0310 ACC=40 M[40]=1 M[41]=2 M[42]=3",
        "D[310]=1 D[311]=2 D[312]=3 AR0=0313 ACC=40",
    ),
    ("TBLR", "TBLR 10h", "ACC=FFFF0041 M[41]=77", "D[310]=77"),
    ("TBLW", "TBLW 10h", "ACC=40 D[310]=1234", "M[40]=1234"),
    ("TBLW", "RPTK 1 / TBLW *+", "AR0=0310 ACC=40 D[310]=5 D[311]=6", "M[40]=5 M[41]=6 AR0=0312"),
    ("TBLW", "TBLW 10h", "ACC=12340041 D[310]=9", "M[41]=9"),
    ("TRAP", "TRAP", "", "PC=1E TOS=21"),
    ("TRAP", "TRAP", "TOS=5555", "TOS=21 S[1]=5555"),
    ("TRAP", "TRAP", "INTM=0", "INTM=0 PC=1E"),
    ("XOR", "XOR 10h", "ACC=12345678 D[310]=FFFF", "ACC=1234A987"),
    ("XOR", "XOR 10h", "ACC=FFFF0000 D[310]=1", "ACC=FFFF0001"),
    ("XOR", "XOR 10h", "ACC=0000AAAA D[310]=AAAA", "ACC=0"),
    ("ZAC", "ZAC", "ACC=12345678", "ACC=0"),
    ("ZAC", "ZAC", "ACC=FFFFFFFF", "ACC=0"),
    ("ZAC", "ZAC", "OV=1 ACC=1", "OV=1 ACC=0"),
    ("ZALH", "ZALH 10h", "ACC=FFFFFFFF D[310]=1234", "ACC=12340000"),
    ("ZALH", "ZALH 10h", "D[310]=8000", "ACC=80000000"),
    ("ZALH", "ZALH 10h", "ACC=5 D[310]=0", "ACC=0"),
    ("ZALS", "ZALS 10h", "ACC=FFFFFFFF D[310]=8000", "ACC=00008000"),
    ("ZALS", "ZALS 10h", "D[310]=1234", "ACC=00001234"),
    ("ZALS", "ZALS 10h", "ACC=5 D[310]=0", "ACC=0"),
];

fn hex(v: &str) -> Result<u64, String> {
    u64::from_str_radix(v, 16).map_err(|_| format!("bad value '{v}'"))
}

fn index(key: &str, prefix: &str) -> Option<Result<u64, String>> {
    key.strip_prefix(prefix).and_then(|r| r.strip_suffix(']')).map(hex)
}

fn items(text: &str) -> Result<Vec<(&str, u64)>, String> {
    text.split_whitespace()
        .map(|it| {
            let (k, v) = it.split_once('=').ok_or_else(|| format!("bad item '{it}'"))?;
            Ok((k, hex(v)?))
        })
        .collect()
}

fn set(board: &mut Board, key: &str, v: u64) -> Result<(), String> {
    let cpu = &mut board.cpu;
    let b = v != 0;
    match key {
        "ACC" => cpu.acc = v as u32 as i32,
        "P" => cpu.preg = v as u32 as i32,
        "T" => cpu.treg = v as u16,
        "ARP" => cpu.arp = v as u8,
        "ARB" => cpu.arb = v as u8,
        "DP" => cpu.dp = v as u16,
        "OV" => cpu.ov = b,
        "OVM" => cpu.ovm = b,
        "SXM" => cpu.sxm = b,
        "INTM" => cpu.intm = b,
        "TC" => cpu.tc = b,
        "CNF" => cpu.cnf = b,
        "XF" => cpu.xf = b,
        "PM" => cpu.pm = v as u8,
        "IMR" => cpu.imr = v as u8,
        "TOS" => cpu.stack[0] = v as u16,
        "ADC" => board.hw.codec.adc_latch = v as u16,
        "RDY" => board.hw.codec.adc_ready = b,
        "WS" => {}
        _ => {
            if let Some(n) = key.strip_prefix("AR").and_then(|n| n.parse::<usize>().ok()) {
                cpu.ar[n] = v as u16;
            } else if let Some(i) = index(key, "S[") {
                cpu.stack[i? as usize] = v as u16;
            } else if let Some(a) = index(key, "D[") {
                board.hw.data[a? as usize] = v as u16;
            } else if let Some(a) = index(key, "M[") {
                board.hw.prog[a? as usize] = v as u16;
            } else {
                return Err(format!("unknown key {key}"));
            }
        }
    }
    Ok(())
}

fn get(board: &Board, cycles: u64, key: &str) -> Result<u64, String> {
    let cpu = &board.cpu;
    Ok(match key {
        "ACC" => cpu.acc as u32 as u64,
        "P" => cpu.preg as u32 as u64,
        "T" => cpu.treg as u64,
        "ARP" => cpu.arp as u64,
        "ARB" => cpu.arb as u64,
        "DP" => cpu.dp as u64,
        "PC" => cpu.pc as u64,
        "OV" => cpu.ov as u64,
        "OVM" => cpu.ovm as u64,
        "SXM" => cpu.sxm as u64,
        "INTM" => cpu.intm as u64,
        "TC" => cpu.tc as u64,
        "CNF" => cpu.cnf as u64,
        "PM" => cpu.pm as u64,
        "TOS" => cpu.stack[0] as u64,
        "IDLE" => cpu.idle as u64,
        "CYC" => cycles,
        "DAC" => board.hw.codec.dac as u64,
        "RUN" => board.hw.codec.running() as u64,
        "RDY" => board.hw.codec.adc_ready as u64,
        _ => {
            if let Some(n) = key.strip_prefix("AR").and_then(|n| n.parse::<usize>().ok()) {
                cpu.ar[n] as u64
            } else if let Some(i) = index(key, "S[") {
                cpu.stack[i? as usize] as u64
            } else if let Some(a) = index(key, "D[") {
                board.memory(Space::Data)[a? as usize] as u64
            } else if let Some(a) = index(key, "M[") {
                board.memory(Space::Prog)[a? as usize] as u64
            } else {
                return Err(format!("unknown key {key}"));
            }
        }
    })
}

/// Run one vector; `Err` describes the first mismatch.
pub fn check(v: &Vector) -> Result<(), String> {
    let (_, src, init, expect) = *v;
    let init = items(init)?;
    let ws = init.iter().find(|(k, _)| *k == "WS").map_or(0, |(_, v)| *v as u8);
    let mut board = Board::new(BoardConfig { wait_states: ws, ..BoardConfig::default() }).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = src.split('/').map(str::trim).collect();
    let text: String = std::iter::once(" .org 20h".to_string())
        .chain(lines.iter().map(|l| format!(" {l}")))
        .collect::<Vec<_>>()
        .join("\n");
    let out = assemble(&text, &AsmOptions::default());
    if out.error_count() > 0 {
        return Err(format!("assembly failed: {:?}", out.diagnostics));
    }
    board.load(&out.object.unwrap(), None);
    board.cpu.pc = 0x20;
    board.cpu.dp = 6;
    for (k, val) in init {
        set(&mut board, k, val)?;
    }
    let repeats = lines.iter().filter(|l| l.to_ascii_uppercase().starts_with("RPT")).count();
    let start = board.cpu.cycles;
    for _ in 0..lines.len() - repeats {
        board.step();
    }
    let cycles = board.cpu.cycles - start;
    for (k, want) in items(expect)? {
        let got = get(&board, cycles, k)?;
        if got != want {
            return Err(format!("{k}: expected {want:X}, got {got:X}"));
        }
    }
    Ok(())
}
