package org.joda.time.base;

import org.joda.time.DateTimeZone;
import org.joda.time.chrono.ZonedChronology;

public abstract class BaseDateTime {

    private volatile long iMillis;

    private volatile ZonedChronology iChronology;

    public BaseDateTime(long instant, ZonedChronology chronology) {
        iChronology = checkChronology(chronology);
        iMillis = checkInstant(instant, iChronology);
    }

    public BaseDateTime(int year, int monthOfYear, int dayOfMonth,
                        int hourOfDay, int minuteOfHour, ZonedChronology chronology) {
        iChronology = checkChronology(chronology);
        long instant = iChronology.getDateTimeMillis(year, monthOfYear, dayOfMonth,
                                                    hourOfDay, minuteOfHour);
        iMillis = checkInstant(instant, iChronology);
    }

    protected ZonedChronology checkChronology(ZonedChronology chronology) {
        if (chronology == null) {
            throw new IllegalArgumentException("Chronology must not be null");
        }
        return chronology;
    }

    protected long checkInstant(long instant, ZonedChronology chronology) {
        return instant;
    }

    public long getMillis() {
        return iMillis;
    }

    public ZonedChronology getChronology() {
        return iChronology;
    }

    public DateTimeZone getZone() {
        return iChronology.getZone();
    }
}
