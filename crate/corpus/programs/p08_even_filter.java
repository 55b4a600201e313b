import java.util.ArrayList;
import java.util.List;

public class EvenFilter {
    public static int main(String[] args) {
        int[] data = {5, 8, 12, 7, 10, 3};
        List<Integer> evens = new ArrayList<>();
        int odd = 0;
        for (int d : data) {
            if (d % 2 == 0) {
                evens.add(d);
            } else {
                odd++;
            }
        }
        int count = evens.size();
        return count;
    }
}
