package org.joda.time;

import org.joda.time.base.BaseDateTime;
import org.joda.time.chrono.ZonedChronology;

public final class DateTime extends BaseDateTime {

    public DateTime(long instant, DateTimeZone zone) {
        super(instant, ZonedChronology.getInstance(zone));
    }

    public DateTime(int year, int monthOfYear, int dayOfMonth,
                    int hourOfDay, int minuteOfHour, DateTimeZone zone) {
        super(year, monthOfYear, dayOfMonth, hourOfDay, minuteOfHour,
              ZonedChronology.getInstance(zone));
    }

    public DateTime withZone(DateTimeZone newZone) {
        return new DateTime(getMillis(), newZone);
    }

    public DateTime plusHours(int hours) {
        if (hours == 0) {
            return this;
        }
        return new DateTime(getMillis() + hours * 3600000L, getZone());
    }

    public String toString() {
        return getChronology().print(getMillis());
    }
}
