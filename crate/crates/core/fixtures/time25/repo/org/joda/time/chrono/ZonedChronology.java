package org.joda.time.chrono;

import org.joda.time.DateTimeZone;

public final class ZonedChronology {

    private static final long MILLIS_PER_MINUTE = 60000L;

    private final DateTimeZone iZone;

    private ZonedChronology(DateTimeZone zone) {
        iZone = zone;
    }

    public static ZonedChronology getInstance(DateTimeZone zone) {
        if (zone == null) {
            throw new IllegalArgumentException("DateTimeZone must not be null");
        }
        return new ZonedChronology(zone);
    }

    public DateTimeZone getZone() {
        return iZone;
    }

    public long getDateTimeMillis(int year, int monthOfYear, int dayOfMonth,
                                  int hourOfDay, int minuteOfHour) {
        long localInstant = LocalCalendar.toLocalMillis(year, monthOfYear, dayOfMonth)
            + (hourOfDay * 60L + minuteOfHour) * MILLIS_PER_MINUTE;
        return localToUTC(localInstant);
    }

    private long localToUTC(long localInstant) {
        int offset = iZone.getOffsetFromLocal(localInstant);
        localInstant -= offset;
        if (offset != iZone.getOffset(localInstant)) {
            throw new IllegalArgumentException("Illegal instant due to time zone offset transition");
        }
        return localInstant;
    }

    public String print(long instant) {
        long local = iZone.convertUTCToLocal(instant);
        int offset = iZone.getOffset(instant);
        return LocalCalendar.format(local) + formatOffset(offset);
    }

    static String formatOffset(int offset) {
        StringBuilder buf = new StringBuilder();
        buf.append(offset >= 0 ? '+' : '-');
        int minutes = Math.abs(offset) / 60000;
        int hours = minutes / 60;
        minutes = minutes % 60;
        buf.append(hours < 10 ? "0" : "").append(hours).append(':');
        buf.append(minutes < 10 ? "0" : "").append(minutes);
        return buf.toString();
    }

    static final class LocalCalendar {

        private LocalCalendar() {
        }

        static long toLocalMillis(int year, int monthOfYear, int dayOfMonth) {
            long days = (year - 1970) * 365L + (monthOfYear - 1) * 30L + (dayOfMonth - 1);
            return days * 86400000L;
        }

        static String format(long localMillis) {
            return String.valueOf(localMillis);
        }
    }
}
